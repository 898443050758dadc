#pragma once

#include "errors.hpp"
#include "probit.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace hle {

/// One published table: all equations of a measure for one age regime.
struct CoefficientTable {
    HealthMeasure measure;
    AgeRegime regime;
    std::vector<ProbitEquation> equations;
};

inline HealthMeasure parse_measure(std::string_view text) {
    if (text == "SAH" || text == "sah") {
        return HealthMeasure::sah;
    }
    if (text == "HH" || text == "hh") {
        return HealthMeasure::hh;
    }
    throw ValidationError("unknown health measure '" + std::string(text) + "'");
}

inline AgeRegime parse_regime(std::string_view text) {
    if (text == "under65") {
        return AgeRegime::under65;
    }
    if (text == "over65") {
        return AgeRegime::over65;
    }
    throw ValidationError("unknown age regime '" + std::string(text) + "'");
}

inline Gender parse_gender(std::string_view text) {
    if (text == "m" || text == "male" || text == "M") {
        return Gender::male;
    }
    if (text == "f" || text == "female" || text == "F") {
        return Gender::female;
    }
    throw ValidationError("unknown gender '" + std::string(text) + "'");
}

namespace detail {

inline std::size_t state_index(HealthMeasure measure, std::string_view name) {
    const auto names = state_names(measure);
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) {
            return k;
        }
    }
    throw ValidationError("state '" + std::string(name) + "' is not a " +
                          std::string(to_string(measure)) + " living state");
}

template <typename T>
T required(const nlohmann::json &obj, const char *key, const std::string &where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ValidationError(where + ": missing field '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError(where + ": field '" + key + "': " + e.what());
    }
}

} // namespace detail

inline CoefficientTable coefficient_table_from_json(const nlohmann::json &doc) {
    const auto measure = parse_measure(detail::required<std::string>(doc, "measure", "coefficients"));
    const auto regime = parse_regime(detail::required<std::string>(doc, "regime", "coefficients"));
    const auto where = std::string(to_string(measure)) + " " + std::string(to_string(regime));
    const auto records = detail::required<nlohmann::json>(doc, "equations", where);
    if (!records.is_array()) {
        throw ValidationError(where + ": 'equations' must be an array");
    }

    CoefficientTable table{measure, regime, {}};
    for (const auto &rec : records) {
        const auto state = detail::required<std::string>(rec, "state", where);
        const auto here = where + " " + state;
        StandardErrors se;
        if (rec.contains("std_errors")) {
            const auto &s = rec.at("std_errors");
            se.cutpoints = detail::required<std::vector<double>>(s, "cutpoints", here);
            se.age_coeff = detail::required<double>(s, "age_coeff", here);
            se.gender_coeff = detail::required<double>(s, "gender_coeff", here);
        }
        try {
            table.equations.emplace_back(detail::state_index(measure, state),
                                         detail::required<std::vector<double>>(rec, "cutpoints", here),
                                         detail::required<double>(rec, "age_coeff", here),
                                         detail::required<double>(rec, "gender_coeff", here),
                                         std::move(se));
        } catch (const ValidationError &e) {
            throw ValidationError(here + ": " + e.what());
        }
    }
    return table;
}

inline nlohmann::json to_json(const CoefficientTable &table) {
    nlohmann::json eqs = nlohmann::json::array();
    for (const auto &eq : table.equations) {
        nlohmann::json rec{
            {"state", std::string(state_names(table.measure)[eq.initial_state()])},
            {"cutpoints", eq.cutpoints()},
            {"age_coeff", eq.age_coeff()},
            {"gender_coeff", eq.gender_coeff()}};
        if (!eq.std_errors().cutpoints.empty()) {
            rec["std_errors"] = {{"cutpoints", eq.std_errors().cutpoints},
                                 {"age_coeff", eq.std_errors().age_coeff},
                                 {"gender_coeff", eq.std_errors().gender_coeff}};
        }
        eqs.push_back(std::move(rec));
    }
    return {{"measure", std::string(to_string(table.measure))},
            {"regime", std::string(to_string(table.regime))},
            {"equations", std::move(eqs)}};
}

inline nlohmann::json read_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// Reads coefficient tables from a file holding either one table object, an
/// array of tables, or an object with a "tables" array.
inline std::vector<CoefficientTable> load_coefficient_tables(const std::filesystem::path &path) {
    const auto doc = read_json_file(path);
    std::vector<CoefficientTable> out;
    const auto *list = &doc;
    if (doc.is_object() && doc.contains("tables")) {
        list = &doc.at("tables");
    }
    try {
        if (list->is_array()) {
            for (const auto &t : *list) {
                out.push_back(coefficient_table_from_json(t));
            }
        } else {
            out.push_back(coefficient_table_from_json(*list));
        }
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return out;
}

/// Combines tables into a full set. Exactly one table per regime, same measure.
inline ProbitCoefficientSet make_coefficient_set(const std::vector<CoefficientTable> &tables) {
    if (tables.empty()) {
        throw ValidationError("no coefficient tables supplied");
    }
    const auto measure = tables.front().measure;
    std::optional<std::vector<ProbitEquation>> under, over;
    for (const auto &t : tables) {
        if (t.measure != measure) {
            throw ValidationError("coefficient tables mix SAH and HH");
        }
        auto &slot = t.regime == AgeRegime::under65 ? under : over;
        if (slot) {
            throw ValidationError("duplicate " + std::string(to_string(t.regime)) + " table");
        }
        slot = t.equations;
    }
    if (!under || !over) {
        throw ValidationError(std::string(to_string(measure)) +
                              ": need both under65 and over65 tables");
    }
    return ProbitCoefficientSet{measure, std::move(*under), std::move(*over)};
}

inline ProbitCoefficientSet load_coefficient_set(const std::vector<std::filesystem::path> &paths) {
    std::vector<CoefficientTable> tables;
    for (const auto &p : paths) {
        auto part = load_coefficient_tables(p);
        tables.insert(tables.end(), part.begin(), part.end());
    }
    return make_coefficient_set(tables);
}

/// The shipped tables live in `<data_dir>/coefficients/{sah,hh}_{under65,over65}.json`.
inline ProbitCoefficientSet load_bundled_coefficients(const std::filesystem::path &data_dir,
                                                      HealthMeasure measure) {
    const std::string stem = measure == HealthMeasure::sah ? "sah" : "hh";
    const auto dir = data_dir / "coefficients";
    return load_coefficient_set({dir / (stem + "_under65.json"), dir / (stem + "_over65.json")});
}

} // namespace hle
