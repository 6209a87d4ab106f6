#include "sbl/harness/csv.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sbl::harness {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void Row::sep() {
    if (!first_) line_ += ',';
    first_ = false;
}

Row& Row::operator<<(double v) {
    sep();
    line_ += g17(v);
    return *this;
}

Row& Row::operator<<(int v) {
    sep();
    line_ += std::to_string(v);
    return *this;
}

Row& Row::operator<<(long v) {
    sep();
    line_ += std::to_string(v);
    return *this;
}

Row& Row::operator<<(unsigned long v) {
    sep();
    line_ += std::to_string(v);
    return *this;
}

Row& Row::operator<<(const std::string& v) {
    sep();
    if (v.find_first_of(",\"\n") == std::string::npos) {
        line_ += v;
        return *this;
    }
    line_ += '"';
    for (char c : v) {
        if (c == '"') line_ += '"';
        line_ += c;
    }
    line_ += '"';
    return *this;
}

void write_csv(const std::string& path, const std::string& description, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    out << "# generated " << stamp << '\n';
    out << "# " << description << '\n';
    out << body;
}

namespace {

std::string without_first_line(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    const auto nl = s.find('\n');
    return nl == std::string::npos ? std::string{} : s.substr(nl + 1);
}

} // namespace

bool same_csv_content(const std::string& a, const std::string& b) {
    const std::string x = without_first_line(a);
    return !x.empty() && x == without_first_line(b);
}

} // namespace sbl::harness
