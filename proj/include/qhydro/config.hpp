#ifndef QHYDRO_CONFIG_HPP
#define QHYDRO_CONFIG_HPP

#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compare.hpp"
#include "eos.hpp"
#include "errors.hpp"
#include "euler.hpp"
#include "gibbs.hpp"
#include "lattice.hpp"

namespace qhydro {

using nlohmann::json;

/// Published experiment schema (a JSON Schema subset: type, enum, properties,
/// required, additionalProperties, propertyNames, items, min/maxItems,
/// minimum, maximum, exclusiveMinimum, exclusiveMaximum, pattern).
inline const char* experiment_schema_text() {
    return R"SCHEMA({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "qhydro experiment",
  "type": "object",
  "additionalProperties": false,
  "required": ["mode"],
  "definitions": {
    "range": {
      "type": "object", "additionalProperties": false, "required": ["min", "max", "count"],
      "properties": {
        "min": {"type": "number"}, "max": {"type": "number"},
        "count": {"type": "integer", "minimum": 1, "maximum": 4096}
      }
    },
    "wavevector": {"type": "array", "items": {"type": "integer"}, "minItems": 1, "maxItems": 3},
    "series": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "base": {"type": "number"},
        "modes": {"type": "array", "items": {
          "type": "object", "additionalProperties": false, "required": ["k"],
          "properties": {"k": {"$ref": "#/definitions/wavevector"}, "cos": {"type": "number"}, "sin": {"type": "number"}}
        }}
      }
    },
    "times": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    "box": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "rho": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "e": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
      }
    },
    "cutoff": {
      "type": "object", "additionalProperties": false,
      "properties": {"c": {"type": "number", "exclusiveMinimum": 0}, "range": {"type": "integer", "minimum": 0}}
    }
  },
  "properties": {
    "mode": {"enum": ["eos", "euler", "quantum", "compare", "diagnostics", "selftest"]},
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"},
    "lattice": {
      "type": "object", "additionalProperties": false, "required": ["dims"],
      "properties": {
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 3},
        "spacing": {"type": "number", "exclusiveMinimum": 0},
        "W": {"type": "object", "propertyNames": {"pattern": "^-?[0-9]+(,-?[0-9]+){0,2}$"}, "additionalProperties": {"type": "number"}},
        "range": {"type": "integer", "minimum": 0}
      }
    },
    "lambda": {
      "type": "object", "additionalProperties": false, "required": ["base"],
      "properties": {
        "base": {
          "type": "object", "additionalProperties": false, "required": ["lambda0", "lambda4"],
          "properties": {
            "lambda0": {"type": "number"}, "lambda1": {"type": "number"}, "lambda2": {"type": "number"},
            "lambda3": {"type": "number"}, "lambda4": {"type": "number", "exclusiveMinimum": 0}
          }
        },
        "modes": {"type": "array", "items": {
          "type": "object", "additionalProperties": false, "required": ["component", "k"],
          "properties": {
            "component": {"enum": ["lambda0", "lambda1", "lambda2", "lambda3", "lambda4"]},
            "k": {"$ref": "#/definitions/wavevector"},
            "cos": {"type": "number"}, "sin": {"type": "number"}, "omega": {"type": "number"}
          }
        }}
      }
    },
    "eos": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["continuum", "lattice", "interacting"]},
        "dimension": {"type": "integer", "minimum": 1, "maximum": 3},
        "modes": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1, "maxItems": 3},
        "spacing": {"type": "number", "exclusiveMinimum": 0},
        "grid": {
          "type": "object", "additionalProperties": false, "required": ["lambda0", "lambda4"],
          "properties": {
            "lambda0": {"$ref": "#/definitions/range"},
            "lambda1": {"$ref": "#/definitions/range"},
            "lambda4": {"$ref": "#/definitions/range"}
          }
        },
        "quadrature": {
          "type": "object", "additionalProperties": false,
          "properties": {
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
            "max_depth": {"type": "integer", "minimum": 1, "maximum": 30},
            "accept": {"type": "number", "exclusiveMinimum": 0}
          }
        },
        "newton": {
          "type": "object", "additionalProperties": false,
          "properties": {
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
            "acceptable": {"type": "number", "exclusiveMinimum": 0},
            "max_iterations": {"type": "integer", "minimum": 1}
          }
        },
        "box": {"$ref": "#/definitions/box"}
      }
    },
    "euler": {
      "type": "object", "additionalProperties": false, "required": ["cells"],
      "properties": {
        "cells": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 1, "maxItems": 3},
        "T_end": {"type": "number", "exclusiveMinimum": 0},
        "output_times": {"$ref": "#/definitions/times"},
        "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
        "dissipation": {"type": "number", "minimum": 0},
        "blowup_factor": {"type": "number", "exclusiveMinimum": 1},
        "max_dt": {"type": "number", "minimum": 0},
        "pressure": {"enum": ["eos", "virial", "cached"]},
        "cache": {
          "type": "object", "additionalProperties": false, "required": ["rho", "e"],
          "properties": {"rho": {"$ref": "#/definitions/range"}, "e": {"$ref": "#/definitions/range"}}
        },
        "initial": {
          "type": "object", "additionalProperties": false, "required": ["kind"],
          "properties": {
            "kind": {"enum": ["lambda", "fields", "csv"]},
            "path": {"type": "string"},
            "rho": {"$ref": "#/definitions/series"},
            "velocity": {"type": "array", "items": {"$ref": "#/definitions/series"}, "maxItems": 3},
            "pressure": {"$ref": "#/definitions/series"}
          }
        }
      }
    },
    "quantum": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "times": {"$ref": "#/definitions/times"},
        "cutoff": {"$ref": "#/definitions/cutoff"}
      }
    },
    "compare": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "times": {"$ref": "#/definitions/times"},
        "smoothing_width": {"type": "number", "minimum": 0},
        "test_functions": {"type": "array", "items": {
          "type": "object", "additionalProperties": false, "required": ["k"],
          "properties": {
            "k": {"$ref": "#/definitions/wavevector"},
            "constant": {"type": "number"}, "cos": {"type": "number"}, "sin": {"type": "number"}
          }
        }},
        "rate_dt": {"type": "number", "exclusiveMinimum": 0},
        "refine": {"type": "integer", "minimum": 1, "maximum": 64},
        "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
        "dissipation": {"type": "number", "minimum": 0},
        "cutoff": {"$ref": "#/definitions/cutoff"},
        "box": {"$ref": "#/definitions/box"}
      }
    },
    "diagnostics": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "car_lattices": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 3}},
        "boundary_sizes": {"type": "array", "items": {"type": "integer", "minimum": 2, "maximum": 12}},
        "boundary_pairs": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 4}, "minItems": 2, "maxItems": 2}},
        "fd_step": {"type": "number", "minimum": 1e-6, "maximum": 1e-2},
        "stationarity_times": {"$ref": "#/definitions/times"},
        "export_operators": {"type": "boolean"}
      }
    },
    "selftest": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "eos_cache": {"type": "string"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}, "propertyNames": {"enum": [
          "car", "car_seconds", "duality", "duality_order", "entropy_margin", "entropy_seconds", "stationary_entropy",
          "conservation", "virial", "galilean", "round_trip", "euler_step_drift", "contact_l2", "sound_speed",
          "euler_order", "euler_seconds", "rate_error", "null_factor", "cutoff_growth", "boundary_ratio"]}}
      }
    }
  }
})SCHEMA";
}

inline const json& experiment_schema() {
    static const json s = json::parse(experiment_schema_text());
    return s;
}

namespace detail {

inline std::string type_of(const json& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    return "object";
}

inline bool has_type(const json& v, const std::string& t) {
    const std::string actual = type_of(v);
    if (t == "number") return actual == "number" || actual == "integer";
    if (t == "integer" && actual == "number") return std::floor(v.get<double>()) == v.get<double>();
    return actual == t;
}

inline const json& resolve(const json& root, const json& schema) {
    if (!schema.contains("$ref")) return schema;
    const std::string ref = schema.at("$ref");
    if (ref.rfind("#/", 0) != 0) throw Error("unsupported schema reference " + ref);
    return resolve(root, root.at(json::json_pointer(ref.substr(1))));
}

inline void validate(const json& root, const json& schema_in, const json& v, const std::string& path) {
    const json& s = resolve(root, schema_in);
    auto fail = [&](const std::string& what) { throw ConfigError(path.empty() ? "/" : path, what); };
    if (s.contains("type")) {
        const json& t = s.at("type");
        bool ok = false;
        if (t.is_array()) {
            for (const auto& x : t) ok = ok || has_type(v, x.get<std::string>());
        } else {
            ok = has_type(v, t.get<std::string>());
        }
        if (!ok) fail("expected " + t.dump() + ", got " + type_of(v));
    }
    if (s.contains("enum")) {
        bool ok = false;
        for (const auto& e : s.at("enum")) ok = ok || e == v;
        if (!ok) fail("value " + v.dump() + " is not one of " + s.at("enum").dump());
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (s.contains("minimum") && x < s.at("minimum").get<double>()) fail("must be >= " + s.at("minimum").dump());
        if (s.contains("maximum") && x > s.at("maximum").get<double>()) fail("must be <= " + s.at("maximum").dump());
        if (s.contains("exclusiveMinimum") && !(x > s.at("exclusiveMinimum").get<double>()))
            fail("must be > " + s.at("exclusiveMinimum").dump());
        if (s.contains("exclusiveMaximum") && !(x < s.at("exclusiveMaximum").get<double>()))
            fail("must be < " + s.at("exclusiveMaximum").dump());
    }
    if (v.is_string() && s.contains("pattern") && !std::regex_search(v.get<std::string>(), std::regex(s.at("pattern").get<std::string>())))
        fail("does not match " + s.at("pattern").dump());
    if (v.is_array()) {
        if (s.contains("minItems") && v.size() < s.at("minItems").get<std::size_t>())
            fail("needs at least " + s.at("minItems").dump() + " items");
        if (s.contains("maxItems") && v.size() > s.at("maxItems").get<std::size_t>())
            fail("allows at most " + s.at("maxItems").dump() + " items");
        if (s.contains("items"))
            for (std::size_t i = 0; i < v.size(); ++i) validate(root, s.at("items"), v[i], path + "/" + std::to_string(i));
    }
    if (v.is_object()) {
        if (s.contains("required"))
            for (const auto& k : s.at("required"))
                if (!v.contains(k.get<std::string>())) throw ConfigError(path + "/" + k.get<std::string>(), "required key is missing");
        const json props = s.value("properties", json::object());
        for (auto it = v.begin(); it != v.end(); ++it) {
            const std::string key_path = path + "/" + it.key();
            if (s.contains("propertyNames")) validate(root, s.at("propertyNames"), json(it.key()), key_path);
            if (props.contains(it.key())) {
                validate(root, props.at(it.key()), it.value(), key_path);
            } else if (s.contains("additionalProperties")) {
                const json& ap = s.at("additionalProperties");
                if (ap.is_boolean()) {
                    if (!ap.get<bool>()) throw ConfigError(key_path, "unknown key");
                } else {
                    validate(root, ap, it.value(), key_path);
                }
            }
        }
    }
}

} // namespace detail

/// Throws ConfigError naming the offending key (as a JSON pointer).
inline void validate_config(const json& config) { detail::validate(experiment_schema(), experiment_schema(), config, ""); }

/// Applies "a.b.c=value": the value is parsed as JSON, falling back to a plain
/// string. Numeric segments index into existing arrays.
inline void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("", "override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &config;
    std::string pointer;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (seg.empty()) throw ConfigError(pointer, "empty segment in override key '" + key + "'");
        pointer += "/" + seg;
        json* next = nullptr;
        if (node->is_array()) {
            if (seg.find_first_not_of("0123456789") != std::string::npos) throw ConfigError(pointer, "array index expected");
            const std::size_t i = std::stoul(seg);
            if (i >= node->size()) throw ConfigError(pointer, "index out of range");
            next = &(*node)[i];
        } else {
            if (!node->is_object()) *node = json::object();
            next = &(*node)[seg];
        }
        node = next;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

inline json load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    json config = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("", "cannot read config file " + path);
        config = json::parse(in, nullptr, false);
        if (config.is_discarded()) throw ConfigError("", "config file " + path + " is not valid JSON");
    }
    for (const auto& o : overrides) apply_override(config, o);
    validate_config(config);
    return config;
}

// ----- builders from a validated config -----

inline Lattice lattice_from(const json& c) {
    const json& l = c.at("lattice");
    return Lattice(l.at("dims").get<std::vector<int>>(), l.value("spacing", 1.0));
}

inline PairPotential potential_from(const json& c, const Lattice& lat) {
    const json& l = c.at("lattice");
    std::map<PairPotential::Displacement, double> entries;
    int range = 0;
    if (l.contains("W")) {
        for (auto it = l.at("W").begin(); it != l.at("W").end(); ++it) {
            PairPotential::Displacement r{0, 0, 0};
            std::stringstream ss(it.key());
            std::string part;
            int a = 0;
            while (std::getline(ss, part, ',')) {
                if (a >= lat.dimension()) throw ConfigError("/lattice/W/" + it.key(), "displacement has more axes than the lattice");
                r[a++] = std::stoi(part);
            }
            entries[r] = it.value().get<double>();
            range = std::max(range, int(std::ceil(std::sqrt(double(r[0]) * r[0] + double(r[1]) * r[1] + double(r[2]) * r[2]) - 1e-12)));
        }
    }
    PairPotential w(entries, l.value("range", range));
    w.check_fits(lat);
    return w;
}

inline int component_index(const std::string& name) { return name.back() - '0'; }

/// lambda profile; lambda4 must stay positive everywhere on the torus.
inline FourierProfile profile_from(const json& c) {
    const json& l = c.at("lambda");
    FourierProfile p;
    const json& b = l.at("base");
    for (int mu = 0; mu < 5; ++mu) p.base[mu] = b.value("lambda" + std::to_string(mu), 0.0);
    double swing4 = 0;
    if (l.contains("modes")) {
        for (const auto& m : l.at("modes")) {
            FourierProfile::Mode md;
            md.component = component_index(m.at("component").get<std::string>());
            auto k = m.at("k").get<std::vector<int>>();
            md.wavevector = {0, 0, 0};
            for (std::size_t a = 0; a < k.size(); ++a) md.wavevector[a] = k[a];
            md.cos_coeff = m.value("cos", 0.0);
            md.sin_coeff = m.value("sin", 0.0);
            md.omega = m.value("omega", 0.0);
            if (md.component == 4) swing4 += std::hypot(md.cos_coeff, md.sin_coeff);
            p.modes.push_back(md);
        }
    }
    if (!(p.base[4] - swing4 > 0))
        throw ConfigError("/lambda/base/lambda4", "lambda4 (inverse temperature) must stay positive over the whole profile");
    return p;
}

inline OnePhaseBox box_from(const json& b) {
    OnePhaseBox box;
    if (b.contains("rho")) {
        box.rho_min = b.at("rho")[0];
        box.rho_max = b.at("rho")[1];
    }
    if (b.contains("e")) {
        box.e_min = b.at("e")[0];
        box.e_max = b.at("e")[1];
    }
    return box;
}

inline NewtonOptions newton_from(const json& c) {
    NewtonOptions o;
    if (c.contains("eos") && c.at("eos").contains("newton")) {
        const json& n = c.at("eos").at("newton");
        o.tolerance = n.value("tolerance", o.tolerance);
        o.acceptable = n.value("acceptable", o.acceptable);
        o.max_iterations = n.value("max_iterations", o.max_iterations);
    }
    return o;
}

inline std::vector<double> range_from(const json& r) {
    const double a = r.at("min"), b = r.at("max");
    const int n = r.at("count");
    if (n == 1) return {a};
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

/// Builds the configured free-gas model (continuum or lattice). The interacting
/// table is built separately because it needs the lattice section.
inline std::shared_ptr<EquationOfState> free_eos_from(const json& c) {
    const json e = c.value("eos", json::object());
    const std::string kind = e.value("kind", "continuum");
    std::shared_ptr<EquationOfState> m;
    if (kind == "continuum") {
        QuadratureOptions q;
        if (e.contains("quadrature")) {
            q.tolerance = e["quadrature"].value("tolerance", q.tolerance);
            q.max_depth = e["quadrature"].value("max_depth", q.max_depth);
            q.accept = e["quadrature"].value("accept", q.accept);
        }
        m = std::make_shared<ContinuumFreeGas>(e.value("dimension", 3), q);
    } else if (kind == "lattice") {
        if (!e.contains("modes")) throw ConfigError("/eos/modes", "required for the lattice equation of state");
        m = std::make_shared<LatticeFreeGas>(e.at("modes").get<std::vector<int>>(), e.value("spacing", 1.0));
    } else {
        throw ConfigError("/eos/kind", "'" + kind + "' is not a free-gas model");
    }
    if (e.contains("box")) m->box = box_from(e.at("box"));
    return m;
}

inline CompareConfig compare_config_from(const json& c, int threads) {
    CompareConfig cc;
    cc.lattice = lattice_from(c);
    cc.potential = potential_from(c, cc.lattice);
    cc.profile = profile_from(c);
    const json k = c.value("compare", json::object());
    if (k.contains("times")) cc.times = k.at("times").get<std::vector<double>>();
    cc.smoothing_width = k.value("smoothing_width", cc.smoothing_width);
    if (k.contains("test_functions")) {
        for (const auto& t : k.at("test_functions")) {
            TestFunction f;
            auto kv = t.at("k").get<std::vector<int>>();
            for (std::size_t a = 0; a < kv.size(); ++a) f.wavevector[a] = kv[a];
            f.constant = t.value("constant", 0.0);
            f.cos_coeff = t.value("cos", 0.0);
            f.sin_coeff = t.value("sin", 0.0);
            cc.test_functions.push_back(f);
        }
    }
    cc.rate_dt = k.value("rate_dt", cc.rate_dt);
    cc.refine = k.value("refine", cc.refine);
    cc.euler.cfl = k.value("cfl", cc.euler.cfl);
    cc.euler.dissipation = k.value("dissipation", cc.euler.dissipation);
    if (k.contains("cutoff")) {
        cc.cutoff_c = k["cutoff"].value("c", cc.cutoff_c);
        cc.cutoff_range = k["cutoff"].value("range", cc.cutoff_range);
    }
    if (k.contains("box")) cc.box = box_from(k.at("box"));
    cc.threads = threads;
    return cc;
}

} // namespace qhydro

#endif
