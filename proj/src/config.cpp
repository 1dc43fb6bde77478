#include "phiexp/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace phiexp {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

class ValueParser {
public:
    explicit ValueParser(const std::string& s) : s_(s) {}

    ConfigValue parse() {
        ConfigValue v = value();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) {
        throw ConfigError("config: " + what + " in value '" + s_ + "'");
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    ConfigValue value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("empty value");
        const char c = s_[pos_];
        if (c == '"') return string_value();
        if (c == '[') return array_value();
        if (std::isalpha(static_cast<unsigned char>(c))) return keyword_value();
        return number_value();
    }
    ConfigValue string_value() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') out += s_[pos_++];
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return ConfigValue(out);
    }
    ConfigValue keyword_value() {
        std::string word;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            word += s_[pos_++];
        if (word == "true") return ConfigValue(true);
        if (word == "false") return ConfigValue(false);
        if (word == "inf") return ConfigValue(std::numeric_limits<double>::infinity());
        fail("unknown keyword '" + word + "'");
    }
    ConfigValue number_value() {
        const char* start = s_.c_str() + pos_;
        char* end = nullptr;
        const double x = std::strtod(start, &end);
        if (end == start) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - start);
        return ConfigValue(x);
    }
    ConfigValue array_value() {
        ++pos_;  // '['
        ConfigValue::Array items;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return ConfigValue(items);
        }
        while (true) {
            items.push_back(value());
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return ConfigValue(items);
            }
            fail("expected ',' or ']'");
        }
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

void canonical_impl(const ConfigValue& cv, std::ostream& os);

}  // namespace

ConfigValue ConfigValue::parse(const std::string& text) {
    ConfigValue root;
    ConfigValue* current = &root;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config: malformed table header at line " + std::to_string(line_no));
            std::string path = trim(line.substr(1, line.size() - 2));
            current = &root;
            std::size_t start = 0;
            while (start <= path.size()) {
                const std::size_t dot = path.find('.', start);
                const std::string part = trim(path.substr(start, dot == std::string::npos ? dot : dot - start));
                if (part.empty()) throw ConfigError("config: empty table name at line " + std::to_string(line_no));
                current = &current->insert(part, ConfigValue(Table{}));
                if (dot == std::string::npos) break;
                start = dot + 1;
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected 'key = value' at line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(line_no));
        current->insert(key, ValueParser(trim(line.substr(eq + 1))).parse());
    }
    return root;
}

ConfigValue ConfigValue::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const ConfigValue& ConfigValue::at(const std::string& key) const {
    const ConfigValue* v = maybe(key);
    if (!v) throw ConfigError("config: missing required key '" + key + "'");
    return *v;
}

const ConfigValue* ConfigValue::maybe(const std::string& key) const {
    if (!is_table()) return nullptr;
    const auto& t = std::get<Table>(v_);
    const auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

ConfigValue& ConfigValue::insert(const std::string& key, ConfigValue value) {
    if (!is_table()) throw ConfigError("config: cannot insert into a non-table value");
    auto& t = std::get<Table>(v_);
    auto it = t.find(key);
    if (it == t.end()) return t.emplace(key, std::move(value)).first->second;
    if (it->second.is_table() && value.is_table()) return it->second;  // reopening a table header
    it->second = std::move(value);
    return it->second;
}

double ConfigValue::as_number(const std::string& ctx) const {
    if (!is_number()) throw ConfigError("config: '" + ctx + "' must be a number");
    return std::get<double>(v_);
}

int ConfigValue::as_int(const std::string& ctx) const {
    const double x = as_number(ctx);
    if (x != std::floor(x) || std::abs(x) > 1e15) throw ConfigError("config: '" + ctx + "' must be an integer");
    return static_cast<int>(x);
}

bool ConfigValue::as_bool(const std::string& ctx) const {
    if (!is_bool()) throw ConfigError("config: '" + ctx + "' must be a boolean");
    return std::get<bool>(v_);
}

const std::string& ConfigValue::as_string(const std::string& ctx) const {
    if (!is_string()) throw ConfigError("config: '" + ctx + "' must be a string");
    return std::get<std::string>(v_);
}

const ConfigValue::Array& ConfigValue::as_array(const std::string& ctx) const {
    if (!is_array()) throw ConfigError("config: '" + ctx + "' must be an array");
    return std::get<Array>(v_);
}

const ConfigValue::Table& ConfigValue::as_table(const std::string& ctx) const {
    if (!is_table()) throw ConfigError("config: '" + ctx + "' must be a table");
    return std::get<Table>(v_);
}

std::vector<double> ConfigValue::as_number_array(const std::string& ctx) const {
    const Array& a = as_array(ctx);
    std::vector<double> out;
    out.reserve(a.size());
    for (const auto& item : a) out.push_back(item.as_number(ctx + "[]"));
    return out;
}

Eigen::VectorXd ConfigValue::as_vector(const std::string& ctx) const {
    const auto nums = as_number_array(ctx);
    return Eigen::Map<const Eigen::VectorXd>(nums.data(), static_cast<long>(nums.size()));
}

Eigen::MatrixXd ConfigValue::as_matrix(const std::string& ctx) const {
    const Array& rows = as_array(ctx);
    if (rows.empty()) throw ConfigError("config: '" + ctx + "' must be a non-empty matrix");
    const std::size_t n = rows.size();
    Eigen::MatrixXd m(n, rows.front().as_array(ctx + " row").size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = rows[i].as_number_array(ctx + " row");
        if (static_cast<long>(row.size()) != m.cols())
            throw ConfigError("config: '" + ctx + "' rows have inconsistent lengths");
        for (std::size_t j = 0; j < row.size(); ++j) m(static_cast<long>(i), static_cast<long>(j)) = row[j];
    }
    return m;
}

namespace {

void canonical_impl(const ConfigValue& cv, std::ostream& os) {
    if (cv.is_table()) {
        os << '{';
        bool first = true;
        for (const auto& [k, v] : cv.as_table("")) {
            if (!first) os << ',';
            first = false;
            os << k << ':';
            canonical_impl(v, os);
        }
        os << '}';
    } else if (cv.is_array()) {
        os << '[';
        for (std::size_t i = 0; i < cv.as_array("").size(); ++i) {
            if (i) os << ',';
            canonical_impl(cv.as_array("")[i], os);
        }
        os << ']';
    } else if (cv.is_number()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", cv.as_number(""));
        os << buf;
    } else if (cv.is_bool()) {
        os << (cv.as_bool("") ? "true" : "false");
    } else {
        os << '"' << cv.as_string("") << '"';
    }
}

}  // namespace

std::string ConfigValue::canonical() const {
    std::ostringstream os;
    canonical_impl(*this, os);
    return os.str();
}

std::string config_hash_hex(const ConfigValue& cv) {
    const std::string s = cv.canonical();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PhiSpec phi_from_config(const ConfigValue& gen) {
    const std::string kind = gen.at("kind").as_string("generator.kind");
    if (kind == "power") return PhiSpec::power(gen.at("q").as_number("generator.q"));
    if (kind == "perturbed_power")
        return PhiSpec::perturbed_power(gen.at("q").as_number("generator.q"), gen.at("eps").as_number("generator.eps"));
    if (kind == "table")
        return PhiSpec::table_from_csv(gen.at("table_path").as_string("generator.table_path"),
                                       gen.at("delta_zero").as_number("generator.delta_zero"),
                                       gen.at("delta_inf").as_number("generator.delta_inf"));
    throw ConfigError("config: generator.kind must be power | perturbed_power | table");
}

ExperimentConfig load_experiment_config(const std::string& path) {
    ExperimentConfig ec;
    ec.root = ConfigValue::parse_file(path);
    ec.hash = config_hash_hex(ec.root);
    ec.dim = ec.root.at("dim").as_int("dim");
    if (ec.dim < 2 || ec.dim > 3) throw ConfigError("config: dim must be 2 or 3");
    try {
        ec.phi = phi_from_config(ec.root.at("generator"));
        ec.phi.require_admissible(ec.dim);
        ec.lx = std::make_shared<DeformedLogExp>(ec.phi);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // inadmissible or malformed generators are config rejections
        throw ConfigError(std::string("config: generator rejected: ") + e.what());
    }
    if (const ConfigValue* out = ec.root.maybe("out_dir")) ec.out_dir = out->as_string("out_dir");
    if (const ConfigValue* seed = ec.root.maybe("seed")) ec.seed = static_cast<unsigned long long>(seed->as_number("seed"));
    return ec;
}

}  // namespace phiexp
