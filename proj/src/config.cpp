#include "meerr/config.hpp"

#include <cmath>
#include <sstream>

namespace meerr {

namespace {

using nlohmann::json;

struct Collector {
    std::vector<std::string>* errors;
    void add(const std::string& path, const std::string& msg) {
        errors->push_back(path + ": " + msg);
    }
};

bool is_number(const json& j) { return j.is_number(); }

std::optional<double> get_number(Collector& c, const json& obj, const std::string& path,
                                 const char* key) {
    if (!obj.contains(key)) {
        c.add(path + "." + key, "missing");
        return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!is_number(v)) {
        c.add(path + "." + key, "expected a number");
        return std::nullopt;
    }
    return v.get<double>();
}

std::optional<Eigen::VectorXd> get_vector(Collector& c, const json& obj, const std::string& path,
                                          const char* key) {
    if (!obj.contains(key)) {
        c.add(path + "." + key, "missing");
        return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
        c.add(path + "." + key, "expected a non-empty array of numbers");
        return std::nullopt;
    }
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!is_number(v[i])) {
            c.add(path + "." + key, "expected a non-empty array of numbers");
            return std::nullopt;
        }
        out(i) = v[i].get<double>();
    }
    return out;
}

std::optional<Eigen::MatrixXd> get_matrix(Collector& c, const json& obj, const std::string& path,
                                          const char* key) {
    if (!obj.contains(key)) {
        c.add(path + "." + key, "missing");
        return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
        c.add(path + "." + key, "expected an array of rows");
        return std::nullopt;
    }
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (!v[i].is_array() || v[i].empty()) {
            c.add(path + "." + key, "expected an array of rows");
            return std::nullopt;
        }
        if (i == 0) cols = v[i].size();
        if (v[i].size() != cols) {
            c.add(path + "." + key, "rows have unequal lengths");
            return std::nullopt;
        }
    }
    Eigen::MatrixXd out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            if (!is_number(v[i][j])) {
                c.add(path + "." + key, "expected numeric entries");
                return std::nullopt;
            }
            out(i, j) = v[i][j].get<double>();
        }
    return out;
}

void check_known_keys(Collector& c, const json& obj, const std::string& path,
                      std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) c.add(path + "." + it.key(), "unknown key");
    }
}

std::optional<long> get_integer(Collector& c, const json& obj, const std::string& path,
                                const char* key) {
    if (!obj.contains(key)) {
        c.add(path + "." + key, "missing");
        return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        c.add(path + "." + key, "expected an integer");
        return std::nullopt;
    }
    return v.get<long>();
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

}  // namespace

ParsedConfig parse_config(const json& doc) {
    ParsedConfig result;
    Collector c{&result.errors};

    if (!doc.is_object()) {
        c.add("$", "document must be an object");
        return result;
    }
    check_known_keys(c, doc, "$", {"population", "estimators", "simulation"});

    SimulationScenario& sc = result.scenario;

    // population block
    if (!doc.contains("population") || !doc.at("population").is_object()) {
        c.add("population", "missing or not an object");
    } else {
        const json& pop = doc.at("population");
        check_known_keys(c, pop, "population",
                         {"mu0", "mu", "c0", "c", "c0_err", "c_err", "rho0", "rho"});
        PopulationSpec& spec = sc.population;
        if (auto v = get_number(c, pop, "population", "mu0")) spec.mu0 = *v;
        if (auto v = get_vector(c, pop, "population", "mu")) spec.mu = *v;
        if (auto v = get_number(c, pop, "population", "c0")) spec.c0 = *v;
        if (auto v = get_vector(c, pop, "population", "c")) spec.c = *v;
        if (auto v = get_number(c, pop, "population", "c0_err")) spec.c0_err = *v;
        if (auto v = get_vector(c, pop, "population", "c_err")) spec.c_err = *v;
        if (auto v = get_vector(c, pop, "population", "rho0")) spec.rho0 = *v;
        if (auto v = get_matrix(c, pop, "population", "rho")) spec.rho = *v;
    }

    // estimators block
    if (!doc.contains("estimators") || !doc.at("estimators").is_array()) {
        c.add("estimators", "missing or not an array");
    } else {
        const json& arr = doc.at("estimators");
        for (std::size_t k = 0; k < arr.size(); ++k) {
            std::ostringstream pathos;
            pathos << "estimators[" << k << "]";
            const std::string path = pathos.str();
            if (!arr[k].is_object()) {
                c.add(path, "expected an object");
                continue;
            }
            const json& e = arr[k];
            check_known_keys(c, e, path, {"id", "omega", "alpha", "theta", "q"});
            EstimatorConfig cfg;
            if (!e.contains("id") || !e.at("id").is_string()) {
                c.add(path + ".id", "missing or not a string");
                continue;
            }
            auto id = parse_estimator_id(e.at("id").get<std::string>());
            if (!id) {
                c.add(path + ".id", "unknown estimator id '" +
                                        e.at("id").get<std::string>() + "'");
                continue;
            }
            cfg.id = *id;
            if (e.contains("omega")) {
                if (auto v = get_vector(c, e, path, "omega")) cfg.omega = *v;
            }
            if (e.contains("alpha")) {
                if (auto v = get_vector(c, e, path, "alpha")) cfg.alpha = *v;
            }
            if (e.contains("theta")) {
                if (auto v = get_vector(c, e, path, "theta")) cfg.theta = *v;
            }
            if (e.contains("q")) {
                if (auto v = get_integer(c, e, path, "q")) cfg.q = static_cast<int>(*v);
            }
            sc.estimators.push_back(std::move(cfg));
        }
    }

    // simulation block
    if (!doc.contains("simulation") || !doc.at("simulation").is_object()) {
        c.add("simulation", "missing or not an object");
    } else {
        const json& sim = doc.at("simulation");
        check_known_keys(c, sim, "simulation",
                         {"n", "replications", "seed", "distribution", "error_distribution"});
        if (auto v = get_integer(c, sim, "simulation", "n")) sc.n = *v;
        if (auto v = get_integer(c, sim, "simulation", "replications")) sc.replications = *v;
        if (!sim.contains("seed")) {
            c.add("simulation.seed", "missing");
        } else if (!sim.at("seed").is_number_unsigned() && !sim.at("seed").is_number_integer()) {
            c.add("simulation.seed", "expected a non-negative integer");
        } else if (sim.at("seed").is_number_integer() && sim.at("seed").get<long long>() < 0) {
            c.add("simulation.seed", "expected a non-negative integer");
        } else {
            sc.seed = sim.at("seed").get<std::uint64_t>();
        }
        if (sim.contains("distribution")) {
            if (!sim.at("distribution").is_string()) {
                c.add("simulation.distribution", "expected a string");
            } else {
                const std::string d = sim.at("distribution").get<std::string>();
                if (d == "gaussian") sc.distribution = Distribution::Gaussian;
                else if (d == "lognormal") sc.distribution = Distribution::Lognormal;
                else c.add("simulation.distribution", "unknown distribution '" + d + "'");
            }
        }
        if (sim.contains("error_distribution")) {
            if (!sim.at("error_distribution").is_string() ||
                sim.at("error_distribution").get<std::string>() != "gaussian")
                c.add("simulation.error_distribution", "only 'gaussian' is supported");
        }
    }

    if (!result.errors.empty()) return result;

    // Structure is fine; now apply the semantic checks of each layer and map
    // their findings back onto document paths.
    ValidationReport spec_rep = validate_spec(sc.population);
    for (const auto& v : spec_rep.violations) result.errors.push_back("population." + v);
    for (std::size_t k = 0; k < sc.estimators.size(); ++k) {
        ValidationReport er = validate_config(sc.estimators[k], sc.population.p());
        for (const auto& v : er.violations) {
            std::ostringstream os;
            os << "estimators[" << k << "]." << v;
            result.errors.push_back(os.str());
        }
    }
    if (spec_rep.ok) {
        ValidationReport sc_rep = validate_scenario(sc);
        // Spec and estimator findings are already listed above; keep only
        // the scenario-level ones.
        for (const auto& v : sc_rep.violations) {
            if (v.rfind("n:", 0) == 0 || v.rfind("replications:", 0) == 0 ||
                v.rfind("distribution:", 0) == 0)
                result.errors.push_back("simulation." + v);
        }
    }

    result.ok = result.errors.empty();
    return result;
}

ParsedConfig parse_config_text(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        ParsedConfig result;
        result.errors.push_back("$: malformed JSON");
        return result;
    }
    return parse_config(doc);
}

json emit_config(const SimulationScenario& sc) {
    json pop;
    pop["mu0"] = sc.population.mu0;
    pop["mu"] = vector_to_json(sc.population.mu);
    pop["c0"] = sc.population.c0;
    pop["c"] = vector_to_json(sc.population.c);
    pop["c0_err"] = sc.population.c0_err;
    pop["c_err"] = vector_to_json(sc.population.c_err);
    pop["rho0"] = vector_to_json(sc.population.rho0);
    json rho = json::array();
    for (Eigen::Index i = 0; i < sc.population.rho.rows(); ++i)
        rho.push_back(vector_to_json(sc.population.rho.row(i).transpose()));
    pop["rho"] = rho;

    json est = json::array();
    for (const EstimatorConfig& cfg : sc.estimators) {
        json e;
        e["id"] = to_string(cfg.id);
        if (cfg.omega) e["omega"] = vector_to_json(*cfg.omega);
        if (cfg.alpha) e["alpha"] = vector_to_json(*cfg.alpha);
        if (cfg.theta) e["theta"] = vector_to_json(*cfg.theta);
        if (cfg.q) e["q"] = *cfg.q;
        est.push_back(e);
    }

    json sim;
    sim["n"] = sc.n;
    sim["replications"] = sc.replications;
    sim["seed"] = sc.seed;
    sim["distribution"] = sc.distribution == Distribution::Gaussian ? "gaussian" : "lognormal";
    sim["error_distribution"] = "gaussian";

    json doc;
    doc["population"] = pop;
    doc["estimators"] = est;
    doc["simulation"] = sim;
    return doc;
}

}  // namespace meerr
