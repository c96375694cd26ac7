#pragma once

#include <map>
#include <stdexcept>
#include <optional>
#include <string>
#include <vector>

namespace nsopt {

struct ParseError : std::runtime_error {
    int line = 0, column = 0;
    ParseError(const std::string& msg, int l, int c)
        : std::runtime_error(msg + " (line " + std::to_string(l) + ", column " +
                             std::to_string(c) + ")"),
          line(l),
          column(c) {}
};

// Sectioned key-value configuration:
//   [section]
//   key = value        # comment
// Values are typed scalars (bool/int/real/string); no nesting, no code.
class Config {
  public:
    static Config parse_text(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::vector<std::string> sections() const;
    std::vector<std::string> keys(const std::string& section) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const;
    double get_real(const std::string& section, const std::string& key) const;
    double get_real_or(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key) const;
    long long get_int_or(const std::string& section, const std::string& key,
                         long long fallback) const;
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    // Lossless reserialization: sections and keys in first-appearance order.
    std::string serialize() const;

    // Equality of one section's key-value content (used by `compare`).
    bool section_equal(const Config& other, const std::string& section) const;

    int line_of(const std::string& section, const std::string& key) const;

  private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::vector<std::string> section_order_;
    std::map<std::string, std::vector<std::string>> key_order_;
    std::map<std::string, std::map<std::string, Entry>> data_;

    const Entry* find(const std::string& section, const std::string& key) const;
};

}  // namespace nsopt
