#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "pathmed/errors.hpp"
#include "pathmed/montecarlo.hpp"

// Simulation designs arrive as JSON documents with the field names of
// SimulationDesign. Unknown keys are rejected to catch typos; the seed may
// be omitted here and supplied on the command line instead.

namespace pathmed {

struct ParsedDesign {
    SimulationDesign design;
    bool has_seed = false;
};

inline ParsedDesign design_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw usage_error("simulation design must be a JSON object");

    static const std::set<std::string> known = {"a",    "b",     "tau_prime", "sd_x",
                                                "sd_e2", "sd_e1", "n",         "R",
                                                "seed",  "level", "methods",   "B",
                                                "draws"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw usage_error("unknown design field '" + key + "'");
    for (const char* required : {"a", "b", "tau_prime", "n", "R"})
        if (!j.contains(required))
            throw usage_error(std::string("design is missing required field '") + required +
                              "'");

    const auto number = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j.at(key).is_number())
            throw usage_error(std::string("design field '") + key + "' must be a number");
        return j.at(key).get<double>();
    };

    ParsedDesign parsed;
    SimulationDesign& d = parsed.design;
    d.a = number("a", 0);
    d.b = number("b", 0);
    d.tau_prime = number("tau_prime", 0);
    d.sd_x = number("sd_x", 1.0);
    d.sd_e2 = number("sd_e2", 1.0);
    d.sd_e1 = number("sd_e1", 1.0);
    d.n = static_cast<Eigen::Index>(number("n", 0));
    d.R = static_cast<long>(number("R", 0));
    d.level = number("level", 0.95);
    d.B = static_cast<long>(number("B", 2000));
    d.draws = static_cast<long>(number("draws", 100000));

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned())
            throw usage_error("design field 'seed' must be an integer");
        d.seed = j.at("seed").get<std::uint64_t>();
        parsed.has_seed = true;
    }

    if (j.contains("methods")) {
        if (!j.at("methods").is_array())
            throw usage_error("design field 'methods' must be an array of method names");
        d.methods.clear();
        for (const auto& item : j.at("methods")) {
            const std::string name = item.get<std::string>();
            if (name == "Normal")
                d.methods.insert(CiMethod::Normal);
            else if (name == "Bootstrap")
                d.methods.insert(CiMethod::Bootstrap);
            else if (name == "ProductDistribution")
                d.methods.insert(CiMethod::ProductDistribution);
            else
                throw usage_error("unknown interval method '" + name +
                                  "' (expected Normal, Bootstrap, or ProductDistribution)");
        }
    }

    d.validate();
    return parsed;
}

}  // namespace pathmed
