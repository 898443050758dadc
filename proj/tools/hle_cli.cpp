#include "hle/hle.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef HLE_VERSION
#define HLE_VERSION "0.0.0"
#endif
#ifndef HLE_DATA_DIR
#define HLE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kNonConvergence = 3, kOracle = 4 };

// Everything a command needs. Field names match the long flag names so the
// same keys work in config files and manifests.
struct Settings {
    std::string measure = "sah";
    std::string gender = "m";
    std::vector<std::string> coeffs;
    std::string life_table;
    std::string prevalence;
    int from_age = 65;
    double tolerance = 1e-9;
    int max_iter = 100;
    double damping = 1.0;
    bool half_year_correction = false;
    std::uint64_t seed = 1;
    std::uint64_t agents = 1'000'000;
    unsigned threads = 0;
    std::string out;
    std::string manifest;
    std::string mix;
    std::string birth_mix;
    std::optional<int> year;
    std::string tensor = "none";
    bool allow_rank_deficient = false;
};

struct Run {
    std::string command;
    const CLI::App *app = nullptr;
    Settings settings;
    json inputs = json::object();
    json extra = json::object();
    std::vector<std::string> outputs;
};

std::string sha256_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw hle::ValidationError("cannot open " + path.string());
    }
    EVP_MD_CTX *ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

fs::path data_dir() {
    if (const char *env = std::getenv("HLE_DATA_DIR"); env && *env) {
        return env;
    }
    return HLE_DATA_DIR;
}

json record_input(const std::string &path) {
    return {{"path", path}, {"sha256", sha256_file(path)}};
}

json settings_to_json(const Settings &s) {
    json j{{"measure", s.measure},
           {"gender", s.gender},
           {"coeffs", s.coeffs},
           {"from-age", s.from_age},
           {"tolerance", s.tolerance},
           {"max-iter", s.max_iter},
           {"damping", s.damping},
           {"half-year-correction", s.half_year_correction},
           {"seed", s.seed},
           {"agents", s.agents},
           {"threads", s.threads},
           {"tensor", s.tensor},
           {"allow-rank-deficient", s.allow_rank_deficient}};
    for (const auto &[key, value] : {std::pair{"life-table", &s.life_table},
                                     {"prevalence", &s.prevalence},
                                     {"out", &s.out},
                                     {"mix", &s.mix},
                                     {"birth-mix", &s.birth_mix}}) {
        if (!value->empty()) {
            j[key] = *value;
        }
    }
    if (s.year) {
        j["year"] = *s.year;
    }
    return j;
}

// ---------------------------------------------------------------- config

std::string json_scalar_to_arg(const json &v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_float()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    return v.dump();
}

bool user_gave(const std::vector<std::string> &args, const std::string &flag) {
    for (const auto &a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) {
            return true;
        }
    }
    return false;
}

// Turns a config file into extra command-line arguments. Flags given on the
// command line win over the file. A manifest from an earlier run is accepted
// as a config; its recorded input digests must still match.
std::vector<std::string> config_arguments(const fs::path &path, const CLI::App &command,
                                          const std::vector<std::string> &user_args) {
    json doc = hle::read_json_file(path);
    if (!doc.is_object()) {
        throw hle::ValidationError("config file must hold a JSON object");
    }
    if (doc.contains("config")) {
        if (doc.contains("inputs")) {
            const auto check = [](const json &entry) {
                const auto p = entry.at("path").get<std::string>();
                if (sha256_file(p) != entry.at("sha256").get<std::string>()) {
                    throw hle::ValidationError("input " + p +
                                               " changed since the manifest was written");
                }
            };
            for (const auto &[key, entry] : doc["inputs"].items()) {
                if (entry.is_array()) {
                    for (const auto &e : entry) {
                        check(e);
                    }
                } else {
                    check(entry);
                }
            }
        }
        doc = doc["config"];
    }
    std::vector<std::string> args;
    for (const auto &[key, value] : doc.items()) {
        const std::string flag = "--" + key;
        if (key == "config" || command.get_option_no_throw(flag) == nullptr) {
            throw hle::ValidationError("config key '" + key + "' does not apply to " +
                                       command.get_name());
        }
        if (user_gave(user_args, flag)) {
            continue;
        }
        if (value.is_boolean()) {
            if (value.get<bool>()) {
                args.push_back(flag);
            }
        } else if (value.is_array()) {
            for (const auto &v : value) {
                args.push_back(flag);
                args.push_back(json_scalar_to_arg(v));
            }
        } else if (!value.is_null()) {
            args.push_back(flag);
            args.push_back(json_scalar_to_arg(value));
        }
    }
    return args;
}

// ---------------------------------------------------------------- inputs

hle::ProbitCoefficientSet load_coefficients(Run &run, hle::HealthMeasure measure) {
    auto &s = run.settings;
    if (s.coeffs.empty()) {
        const std::string stem = measure == hle::HealthMeasure::sah ? "sah" : "hh";
        const auto dir = data_dir() / "coefficients";
        s.coeffs = {(dir / (stem + "_under65.json")).string(),
                    (dir / (stem + "_over65.json")).string()};
    }
    json list = json::array();
    std::vector<fs::path> paths;
    for (const auto &p : s.coeffs) {
        list.push_back(record_input(p));
        paths.emplace_back(p);
    }
    run.inputs["coefficients"] = list;
    auto set = hle::load_coefficient_set(paths);
    if (set.measure() != measure) {
        throw hle::ValidationError("coefficient files describe " +
                                   std::string(hle::to_string(set.measure())) + ", not " +
                                   std::string(hle::to_string(measure)));
    }
    return set;
}

std::vector<hle::LifeTable> load_tables(Run &run, hle::Gender gender) {
    const auto &s = run.settings;
    if (s.life_table.empty()) {
        throw hle::ValidationError("--life-table is required");
    }
    run.inputs["life_table"] = record_input(s.life_table);
    std::ifstream in(s.life_table);
    if (!in) {
        throw hle::ValidationError("cannot open " + s.life_table);
    }
    auto tables = hle::load_life_tables(in, gender);
    if (s.year) {
        std::erase_if(tables, [&](const auto &t) { return t.base_year() != *s.year; });
        if (tables.empty()) {
            throw hle::ValidationError("life table has no year " + std::to_string(*s.year));
        }
    }
    return tables;
}

const hle::LifeTable &single_table(const std::vector<hle::LifeTable> &tables) {
    if (tables.size() != 1) {
        throw hle::ValidationError("life table holds " + std::to_string(tables.size()) +
                                   " years; choose one with --year");
    }
    return tables.front();
}

hle::CohortVector birth_cohort(const Settings &s, Eigen::Index states) {
    if (s.birth_mix.empty()) {
        return hle::best_state_cohort(states);
    }
    std::vector<double> values;
    for (const auto &field : hle::csv::split(s.birth_mix)) {
        values.push_back(hle::csv::to_double(field, 0));
    }
    if (static_cast<Eigen::Index>(values.size()) != states) {
        throw hle::ValidationError("--birth-mix needs " + std::to_string(states) + " values");
    }
    hle::CohortVector x = Eigen::Map<hle::CohortVector>(values.data(), states);
    if ((x.array() < 0.0).any() || std::abs(x.sum() - 1.0) > 1e-9) {
        throw hle::ValidationError("--birth-mix must be a probability vector");
    }
    return x;
}

hle::AlignmentOptions alignment_options(const Settings &s) {
    hle::AlignmentOptions o;
    o.tolerance = s.tolerance;
    o.max_iterations = s.max_iter;
    o.damping = s.damping;
    o.allow_rank_deficient = s.allow_rank_deficient;
    return o;
}

Eigen::VectorXd mix_at(const std::string &mix, const hle::MatrixSchedule &matrices,
                       const hle::CohortVector &x0, int age) {
    if (mix == "best") {
        return hle::best_state_cohort(matrices.front().rows());
    }
    if (mix == "birth") {
        return hle::state_mix_at_age(matrices, x0, age);
    }
    throw hle::ValidationError("--mix must be 'best' or 'birth'");
}

hle::HealthExpectancy expectancy(const Settings &s, const hle::MatrixSchedule &matrices,
                                 hle::HealthMeasure measure, const Eigen::VectorXd &mix) {
    auto h = hle::healthy_life_expectancy(matrices, measure, s.from_age, mix);
    return s.half_year_correction ? hle::with_half_year_correction(h) : h;
}

// ---------------------------------------------------------------- outputs

// Writes to --out, or stdout when it is empty.
template <class Fn>
void emit(Run &run, Fn &&write) {
    if (run.settings.out.empty()) {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(run.settings.out, std::ios::binary);
    if (!out) {
        throw hle::ValidationError("cannot write " + run.settings.out);
    }
    write(out);
    run.outputs.push_back(run.settings.out);
}

void write_manifest(const Run &run, int exit_code) {
    json doc{{"tool", "hle"},
             {"tool_version", HLE_VERSION},
             {"command", run.command},
             {"config", settings_to_json(run.settings)},
             {"inputs", run.inputs},
             {"outputs", run.outputs},
             {"exit_code", exit_code}};
    for (const auto &[key, value] : run.extra.items()) {
        doc[key] = value;
    }
    // Keep only keys the command accepts, so the manifest replays as a config.
    for (auto it = doc["config"].begin(); it != doc["config"].end();) {
        if (it.key() == "manifest" || run.app->get_option_no_throw("--" + it.key()) == nullptr) {
            it = doc["config"].erase(it);
        } else {
            ++it;
        }
    }
    std::string path = run.settings.manifest;
    if (path.empty() && !run.settings.out.empty()) {
        path = run.settings.out + ".manifest.json";
    }
    if (path.empty()) {
        std::cerr << doc.dump() << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw hle::ValidationError("cannot write manifest " + path);
    }
    out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- commands

int cmd_unadjusted(Run &run) {
    const auto &s = run.settings;
    const auto measure = hle::parse_measure(s.measure);
    const auto gender = hle::parse_gender(s.gender);
    const auto set = load_coefficients(run, measure);
    const auto matrices = hle::build_all_matrices(set, gender);
    const auto x0 = birth_cohort(s, matrices.front().rows());
    const auto h = expectancy(s, matrices, measure, mix_at(s.mix.empty() ? "best" : s.mix, matrices, x0, s.from_age));
    emit(run, [&](std::ostream &out) {
        out << "gender,measure,le,hle,pct_healthy\n"
            << hle::to_string(gender) << ',' << hle::to_string(measure) << ','
            << hle::csv::format(h.le) << ',' << hle::csv::format(h.hle) << ','
            << hle::csv::format(h.pct_healthy) << '\n';
    });
    return kOk;
}

int cmd_align(Run &run) {
    const auto &s = run.settings;
    const auto measure = hle::parse_measure(s.measure);
    const auto gender = hle::parse_gender(s.gender);
    const auto set = load_coefficients(run, measure);
    const auto tables = load_tables(run, gender);
    const auto matrices0 = hle::build_all_matrices(set, gender);
    const auto x0 = birth_cohort(s, matrices0.front().rows());
    const auto options = alignment_options(s);
    const std::string mix = s.mix.empty() ? "birth" : s.mix;

    struct Row {
        int year;
        hle::HealthExpectancy h;
    };
    std::vector<Row> rows;
    json reports = json::array();
    bool all_converged = true;
    for (const auto &table : tables) {
        const auto result = hle::align(matrices0, x0, table, options);
        json r = result.report;
        r["year"] = table.base_year();
        r["target_le"] = table.life_expectancy(s.from_age, s.half_year_correction);
        reports.push_back(r);
        all_converged = all_converged && result.report.converged;
        rows.push_back({table.base_year(),
                        expectancy(s, result.matrices, measure,
                                   mix_at(mix, result.matrices, x0, s.from_age))});
        if (!result.report.converged) {
            std::cerr << "year " << table.base_year() << ": alignment did not converge after "
                      << result.report.iterations << " iterations (residual "
                      << result.report.final_residual << ")\n";
        }
    }
    run.extra["alignment_reports"] = reports;
    emit(run, [&](std::ostream &out) {
        out << "year,le,hle,pct_healthy\n";
        for (const auto &row : rows) {
            out << row.year << ',' << hle::csv::format(row.h.le) << ','
                << hle::csv::format(row.h.hle) << ',' << hle::csv::format(row.h.pct_healthy)
                << '\n';
        }
    });
    return all_converged ? kOk : kNonConvergence;
}

int cmd_sullivan(Run &run) {
    const auto &s = run.settings;
    if (s.life_table.empty() || s.prevalence.empty()) {
        throw hle::ValidationError("sullivan needs --life-table and --prevalence");
    }
    run.inputs["life_table"] = record_input(s.life_table);
    run.inputs["prevalence"] = record_input(s.prevalence);

    std::ifstream lt(s.life_table);
    std::stringstream text;
    text << lt.rdbuf();
    const auto header = hle::csv::read(text).header;
    text.clear();
    text.seekg(0);
    const bool has_lx = std::find(header.begin(), header.end(), "lx") != header.end();
    auto schedule = [&]() {
        if (has_lx) {
            return hle::load_life_table_schedule(text);
        }
        auto tables = hle::load_life_tables(text, hle::parse_gender(s.gender));
        if (s.year) {
            std::erase_if(tables, [&](const auto &t) { return t.base_year() != *s.year; });
        }
        return hle::schedule_from_survival(single_table(tables).survival_by_age());
    }();

    std::ifstream pv(s.prevalence);
    const auto prevalence = hle::load_prevalence(pv);
    const double le = schedule.expectation(s.from_age);
    const double hle_years = hle::sullivan_hle(schedule, prevalence, s.from_age);
    emit(run, [&](std::ostream &out) {
        out << "from_age,le,hle,pct_healthy\n"
            << s.from_age << ',' << hle::csv::format(le) << ',' << hle::csv::format(hle_years)
            << ',' << hle::csv::format(le > 0.0 ? 100.0 * hle_years / le : 0.0) << '\n';
    });
    return kOk;
}

hle::MatrixSchedule schedule_for(Run &run, hle::HealthMeasure measure, hle::Gender gender,
                                 const hle::CohortVector *x0_override = nullptr) {
    const auto set = load_coefficients(run, measure);
    auto matrices = hle::build_all_matrices(set, gender);
    if (run.settings.life_table.empty()) {
        return matrices;
    }
    const auto &table = single_table(load_tables(run, gender));
    const auto x0 = x0_override ? *x0_override : birth_cohort(run.settings, matrices.front().rows());
    auto result = hle::align(matrices, x0, table, alignment_options(run.settings));
    run.extra["alignment_reports"] = json::array({json(result.report)});
    if (!result.report.converged) {
        throw hle::AlignmentError("alignment did not converge after " +
                                  std::to_string(result.report.iterations) + " iterations");
    }
    return std::move(result.matrices);
}

int cmd_simcheck(Run &run) {
    const auto &s = run.settings;
    const auto measure = hle::parse_measure(s.measure);
    const auto gender = hle::parse_gender(s.gender);
    hle::SimulationConfig config;
    config.matrices = schedule_for(run, measure, gender);
    config.agents = s.agents;
    config.seed = s.seed;
    config.measure = hle::to_string(measure);
    config.gender = hle::to_string(gender);
    config.birth_mix = birth_cohort(s, config.matrices.front().rows());
    config.healthy = hle::healthy_states(measure);
    config.hle_age = s.from_age;
    config.threads = s.threads;

    const auto result = hle::simulate(config);
    const std::array ages{10, 30, 50, 70, 90};
    const auto checks = hle::compare_with_analytic(config, result, ages);
    auto doc = hle::to_json(result, checks);
    doc["measure"] = config.measure;
    doc["gender"] = config.gender;
    emit(run, [&](std::ostream &out) { out << doc.dump(2) << '\n'; });
    run.extra["rng"] = result.rng;
    run.extra["all_pass"] = doc["all_pass"];
    if (!doc["all_pass"].get<bool>()) {
        for (const auto &c : checks) {
            if (!c.pass) {
                std::cerr << "oracle check failed: " << c.quantity << " analytic " << c.analytic
                          << " empirical " << c.empirical << " se " << c.standard_error << '\n';
            }
        }
        return kOracle;
    }
    return kOk;
}

int cmd_export(Run &run) {
    const auto &s = run.settings;
    const auto measure = hle::parse_measure(s.measure);
    const auto gender = hle::parse_gender(s.gender);
    const auto matrices = schedule_for(run, measure, gender);
    emit(run, [&](std::ostream &out) {
        if (s.tensor == "occupancy") {
            hle::write_tensor_csv(out, hle::occupancy(matrices));
        } else if (s.tensor == "expected-years") {
            hle::write_tensor_csv(out, hle::expected_years(matrices));
        } else {
            out << "age,to_state,from_state,probability\n";
            for (std::size_t a = 0; a < matrices.size(); ++a) {
                const auto &m = matrices[a];
                for (Eigen::Index k = 0; k < m.cols(); ++k) {
                    for (Eigen::Index j = 0; j < m.rows(); ++j) {
                        out << a << ',' << j << ',' << k << ',' << hle::csv::format(m(j, k))
                            << '\n';
                    }
                }
            }
        }
    });
    return kOk;
}

void add_common(CLI::App &cmd, Settings &s, std::string &config) {
    cmd.add_option("--config", config, "JSON file of flag values, or a manifest to replay");
    cmd.add_option("--measure", s.measure, "Health measure")
        ->check(CLI::IsMember({"sah", "hh", "SAH", "HH"}));
    cmd.add_option("--gender", s.gender, "Gender")->check(CLI::IsMember({"m", "f"}));
    cmd.add_option("--coeffs", s.coeffs, "Coefficient JSON files (default: bundled tables)");
    cmd.add_option("--from-age", s.from_age, "Age for life expectancy")
        ->check(CLI::Range(0, hle::kMaxAge));
    cmd.add_flag("--half-year-correction", s.half_year_correction,
                 "Add half a year for the year of death");
    cmd.add_option("--birth-mix", s.birth_mix, "Comma-separated cohort mix at birth");
    cmd.add_option("--out", s.out, "Output file (default: stdout)");
    cmd.add_option("--manifest", s.manifest, "Manifest path (default: <out>.manifest.json)");
}

void add_alignment(CLI::App &cmd, Settings &s) {
    cmd.add_option("--life-table", s.life_table, "Life table CSV");
    cmd.add_option("--year", s.year, "Use one year of a multi-year life table");
    cmd.add_option("--tolerance", s.tolerance, "Alignment tolerance")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--max-iter", s.max_iter, "Alignment iteration limit")
        ->check(CLI::Range(1, 1'000'000));
    cmd.add_option("--damping", s.damping, "Fraction of each alignment step")
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_flag("--allow-rank-deficient", s.allow_rank_deficient,
                 "Use a minimum-norm solve when the constraint system is singular");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Healthy life expectancy from ordered-probit transition matrices"};
    app.set_version_flag("--version", std::string(HLE_VERSION));
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Run run;
    auto &s = run.settings;
    std::string config;

    auto *unadjusted = app.add_subcommand("unadjusted", "LE and HLE from the unadjusted matrices");
    add_common(*unadjusted, s, config);
    unadjusted->add_option("--mix", s.mix, "State mix at from-age: best (default) or birth");

    auto *align = app.add_subcommand("align", "Align to a life table and report LE and HLE by year");
    add_common(*align, s, config);
    add_alignment(*align, s);
    align->add_option("--mix", s.mix, "State mix at from-age: birth (default) or best");

    auto *sullivan = app.add_subcommand("sullivan", "Prevalence-based HLE");
    add_common(*sullivan, s, config);
    sullivan->add_option("--life-table", s.life_table, "age,lx,ex or survival life table CSV");
    sullivan->add_option("--prevalence", s.prevalence, "age_from,age_to,ill_health_rate CSV");
    sullivan->add_option("--year", s.year, "Year of a multi-year survival table");

    auto *simcheck = app.add_subcommand("simcheck", "Monte Carlo check of the analytic results");
    add_common(*simcheck, s, config);
    add_alignment(*simcheck, s);
    simcheck->add_option("--seed", s.seed, "RNG seed");
    simcheck->add_option("--agents", s.agents, "Simulated lives")->check(CLI::PositiveNumber);
    simcheck->add_option("--threads", s.threads, "Worker threads (0: all cores)");

    auto *exporter = app.add_subcommand("export-matrices", "Write transition matrices or tensors");
    add_common(*exporter, s, config);
    add_alignment(*exporter, s);
    exporter->add_option("--tensor", s.tensor, "none, occupancy or expected-years")
        ->check(CLI::IsMember({"none", "occupancy", "expected-years"}));

    // A config file becomes extra arguments placed before the user's own.
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config") {
                path = args[i + 1];
            } else if (args[i].rfind("--config=", 0) == 0) {
                path = args[i].substr(9);
            }
            if (!path.empty()) {
                // Extra arguments go right after the subcommand name.
                auto at = std::find_if(args.begin(), args.end(),
                                       [](const auto &a) { return !a.starts_with("-"); });
                if (at == args.end()) {
                    throw hle::ValidationError("--config needs a subcommand");
                }
                const auto *command = app.get_subcommand_no_throw(*at);
                if (command == nullptr) {
                    throw hle::ValidationError("unknown subcommand '" + *at + "'");
                }
                auto extra = config_arguments(path, *command, args);
                args.insert(at + 1, extra.begin(), extra.end());
                break;
            }
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }

    int code = kFailure;
    try {
        if (*unadjusted) {
            run.command = "unadjusted";
            run.app = unadjusted;
            code = cmd_unadjusted(run);
        } else if (*align) {
            run.command = "align";
            run.app = align;
            code = cmd_align(run);
        } else if (*sullivan) {
            run.command = "sullivan";
            run.app = sullivan;
            code = cmd_sullivan(run);
        } else if (*simcheck) {
            run.command = "simcheck";
            run.app = simcheck;
            code = cmd_simcheck(run);
        } else if (*exporter) {
            run.command = "export-matrices";
            run.app = exporter;
            code = cmd_export(run);
        }
    } catch (const hle::ValidationError &e) {
        std::cerr << "validation error: " << e.what() << '\n';
        code = kValidation;
    } catch (const hle::DomainError &e) {
        std::cerr << "validation error: " << e.what() << '\n';
        code = kValidation;
    } catch (const hle::AlignmentError &e) {
        std::cerr << "alignment failed: " << e.what() << '\n';
        code = kNonConvergence;
    } catch (const nlohmann::json::exception &e) {
        std::cerr << "validation error: " << e.what() << '\n';
        code = kValidation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    try {
        if (code == kOk || code == kNonConvergence || code == kOracle) {
            write_manifest(run, code);
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    return code;
}
