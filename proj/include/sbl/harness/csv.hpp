// csv.hpp - CSV output conventions: timestamp line, description line, header, %.17g rows

#pragma once

#include <string>
#include <vector>

namespace sbl::harness {

std::string g17(double v);

// Accumulates comma-separated cells of one row.
class Row {
public:
    Row& operator<<(double v);
    Row& operator<<(int v);
    Row& operator<<(long v);
    Row& operator<<(unsigned long v);
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }
    Row& operator<<(bool v) { return *this << (v ? 1 : 0); }
    std::string str() const { return line_ + '\n'; }

private:
    void sep();
    std::string line_;
    bool first_{true};
};

// Writes "# generated <UTC timestamp>", "# <description>", then body (header and rows).
// The first line is the only part that varies between identical runs.
void write_csv(const std::string& path, const std::string& description, const std::string& body);

// Compares two CSV files ignoring their first line.
bool same_csv_content(const std::string& a, const std::string& b);

} // namespace sbl::harness
