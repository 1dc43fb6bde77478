#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "phiexp/deformed.hpp"
#include "phiexp/generators.hpp"

namespace phiexp {

/// Parsed value of the TOML-style config format: key = value lines under
/// [table] and [table.subtable] headers; values are numbers, booleans,
/// quoted strings, or (nested) inline arrays. std::map keeps key order
/// deterministic for hashing and manifests.
class ConfigValue {
public:
    using Array = std::vector<ConfigValue>;
    using Table = std::map<std::string, ConfigValue>;

    ConfigValue() : v_(Table{}) {}
    explicit ConfigValue(double x) : v_(x) {}
    explicit ConfigValue(bool b) : v_(b) {}
    explicit ConfigValue(std::string s) : v_(std::move(s)) {}
    explicit ConfigValue(Array a) : v_(std::move(a)) {}
    explicit ConfigValue(Table t) : v_(std::move(t)) {}

    static ConfigValue parse(const std::string& text);
    static ConfigValue parse_file(const std::string& path);

    bool is_table() const { return std::holds_alternative<Table>(v_); }
    bool is_array() const { return std::holds_alternative<Array>(v_); }
    bool is_number() const { return std::holds_alternative<double>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }

    /// Table lookup; throws ConfigError naming the key when absent.
    const ConfigValue& at(const std::string& key) const;
    const ConfigValue* maybe(const std::string& key) const;
    ConfigValue& insert(const std::string& key, ConfigValue value);

    double as_number(const std::string& ctx) const;
    int as_int(const std::string& ctx) const;
    bool as_bool(const std::string& ctx) const;
    const std::string& as_string(const std::string& ctx) const;
    const Array& as_array(const std::string& ctx) const;
    const Table& as_table(const std::string& ctx) const;

    std::vector<double> as_number_array(const std::string& ctx) const;
    Eigen::VectorXd as_vector(const std::string& ctx) const;
    Eigen::MatrixXd as_matrix(const std::string& ctx) const;

    /// Deterministic canonical dump (sorted keys, 17-digit floats).
    std::string canonical() const;

private:
    std::variant<double, std::string, bool, Array, Table> v_;
};

/// FNV-1a hash of the canonical dump; embedded in every output file.
std::string config_hash_hex(const ConfigValue& cv);

/// Builds a generator from a [generator] table:
///   kind = "power" | "perturbed_power" | "table"
///   q, eps, table_path, delta_zero, delta_inf as applicable.
PhiSpec phi_from_config(const ConfigValue& gen);

/// A fully resolved experiment configuration: the parsed tree plus the
/// constructed generator, its log/exp realization, and the config hash.
struct ExperimentConfig {
    ConfigValue root;
    PhiSpec phi = PhiSpec::power(1.0);
    std::shared_ptr<const DeformedLogExp> lx;
    int dim = 2;
    std::string out_dir = ".";
    unsigned long long seed = 0;
    std::string hash;
};

/// Parses and schema-validates a config file. Generator admissibility for
/// the declared dimension is part of validation: an inadmissible generator
/// (e.g. a power exponent outside Q_d) is rejected here as a config error.
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace phiexp
