#include "cfq/config.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace cfq::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& what) {
    throw ConfigError(origin + ": " + path + ": " + what);
}

void require_keys(const json& j, const std::string& origin, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) fail(origin, path + "." + key, "unknown field");
    }
}

double get_number(const json& j, const std::string& origin, const std::string& path) {
    if (!j.is_number()) fail(origin, path, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& origin, const std::string& path) {
    if (!j.is_number_integer()) fail(origin, path, "expected an integer");
    return j.get<int>();
}

std::complex<double> get_complex(const json& j, const std::string& origin,
                                 const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail(origin, path, "expected a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<int> get_modes(const json& j, const std::string& origin, const std::string& path,
                           int limit, const char* kind) {
    if (!j.is_array()) fail(origin, path, "expected an array of mode indices");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string at = path + "[" + std::to_string(i) + "]";
        const int m = get_int(j[i], origin, at);
        if (m < 1) fail(origin, at, "mode indices are 1-based");
        if (m > limit)
            fail(origin, at,
                 std::string("exceeds the declared ") + kind + " count " + std::to_string(limit));
        out.push_back(m);
    }
    return out;
}

fock::PolyTerm parse_term(const json& j, const std::string& origin, const std::string& path,
                          const fock::HilbertSpec& spec) {
    if (!j.is_object()) fail(origin, path, "expected a term object");
    require_keys(j, origin, path, {"coeff", "fdag", "f", "bdag", "b"});
    if (!j.contains("coeff")) fail(origin, path + ".coeff", "missing");
    fock::PolyTerm term;
    term.coeff = get_complex(j["coeff"], origin, path + ".coeff");
    if (j.contains("fdag"))
        term.fdag = get_modes(j["fdag"], origin, path + ".fdag", spec.n_fermions, "fermion");
    if (j.contains("f"))
        term.f = get_modes(j["f"], origin, path + ".f", spec.n_fermions, "fermion");
    if (j.contains("bdag"))
        term.bdag = get_modes(j["bdag"], origin, path + ".bdag", spec.n_bosons, "boson");
    if (j.contains("b")) term.b = get_modes(j["b"], origin, path + ".b", spec.n_bosons, "boson");
    return term;
}

fock::OperatorPolynomial parse_poly(const json& j, const std::string& origin,
                                    const std::string& path, const fock::HilbertSpec& spec) {
    if (!j.is_array()) fail(origin, path, "expected an array of terms");
    fock::OperatorPolynomial poly;
    for (std::size_t i = 0; i < j.size(); ++i)
        poly.terms.push_back(parse_term(j[i], origin, path + "[" + std::to_string(i) + "]", spec));
    return poly;
}

std::vector<fock::OperatorPolynomial> parse_poly_list(const json& j, const std::string& origin,
                                                      const std::string& path,
                                                      const fock::HilbertSpec& spec) {
    if (!j.is_array()) fail(origin, path, "expected an array of operators");
    std::vector<fock::OperatorPolynomial> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(parse_poly(j[i], origin, path + "[" + std::to_string(i) + "]", spec));
    return out;
}

json parse_json(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError(origin + ": not valid JSON");
    return j;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

ProblemConfig parse_config(const std::string& text, const std::string& origin) {
    const json j = parse_json(text, origin);
    if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
    require_keys(j, origin, "config",
                 {"example", "modes", "hamiltonian", "constraints", "lattice", "bose_fermi",
                  "tolerances"});

    ProblemConfig cfg;
    cfg.origin = origin;
    if (j.contains("example")) {
        if (!j["example"].is_string()) fail(origin, "config.example", "expected a string");
        cfg.example = j["example"].get<std::string>();
    }

    if (!j.contains("modes")) fail(origin, "config.modes", "missing");
    const json& modes = j["modes"];
    if (!modes.is_object()) fail(origin, "config.modes", "expected an object");
    require_keys(modes, origin, "config.modes", {"fermions", "bosons", "boson_cutoff"});
    if (!modes.contains("fermions")) fail(origin, "config.modes.fermions", "missing");
    cfg.spec.n_fermions = get_int(modes["fermions"], origin, "config.modes.fermions");
    if (cfg.spec.n_fermions < 0) fail(origin, "config.modes.fermions", "must be nonnegative");
    if (modes.contains("bosons")) {
        cfg.spec.n_bosons = get_int(modes["bosons"], origin, "config.modes.bosons");
        if (cfg.spec.n_bosons < 0) fail(origin, "config.modes.bosons", "must be nonnegative");
    }
    if (modes.contains("boson_cutoff")) {
        cfg.spec.boson_cutoff = get_int(modes["boson_cutoff"], origin, "config.modes.boson_cutoff");
        if (cfg.spec.boson_cutoff < 0) fail(origin, "config.modes.boson_cutoff", "must be nonnegative");
    }
    if (cfg.spec.n_bosons > 0 && cfg.spec.boson_cutoff == 0)
        fail(origin, "config.modes.boson_cutoff", "required when bosons are declared");

    if (j.contains("hamiltonian"))
        cfg.hamiltonian = parse_poly(j["hamiltonian"], origin, "config.hamiltonian", cfg.spec);

    if (j.contains("constraints")) {
        const json& cons = j["constraints"];
        if (!cons.is_object()) fail(origin, "config.constraints", "expected an object");
        require_keys(cons, origin, "config.constraints", {"even", "odd"});
        if (cons.contains("even"))
            cfg.even_constraints =
                parse_poly_list(cons["even"], origin, "config.constraints.even", cfg.spec);
        if (cons.contains("odd"))
            cfg.odd_constraints =
                parse_poly_list(cons["odd"], origin, "config.constraints.odd", cfg.spec);
    }

    if (j.contains("lattice")) {
        const json& lat = j["lattice"];
        if (!lat.is_object()) fail(origin, "config.lattice", "expected an object");
        require_keys(lat, origin, "config.lattice",
                     {"n_slices", "t", "schedule", "slices", "multipliers"});
        cfg.lattice.present = true;
        if (lat.contains("n_slices")) {
            cfg.lattice.n_slices = get_int(lat["n_slices"], origin, "config.lattice.n_slices");
            if (cfg.lattice.n_slices < 1)
                fail(origin, "config.lattice.n_slices", "must be positive");
        }
        if (lat.contains("t")) cfg.lattice.t = get_number(lat["t"], origin, "config.lattice.t");
        if (lat.contains("schedule")) {
            const json& sched = lat["schedule"];
            if (!sched.is_array()) fail(origin, "config.lattice.schedule", "expected an array");
            for (std::size_t i = 0; i < sched.size(); ++i)
                cfg.lattice.schedule.push_back(get_number(
                    sched[i], origin, "config.lattice.schedule[" + std::to_string(i) + "]"));
        }
        for (const char* key : {"slices", "multipliers"})
            if (lat.contains(key)) {
                if (!lat[key].is_string())
                    fail(origin, std::string("config.lattice.") + key, "expected a string");
                const std::string v = lat[key].get<std::string>();
                if (key == std::string("slices")) {
                    if (v != "symbol" && v != "exact")
                        fail(origin, "config.lattice.slices", "expected \"symbol\" or \"exact\"");
                    cfg.lattice.slices = v;
                } else {
                    if (v != "exact_phase" && v != "substitution")
                        fail(origin, "config.lattice.multipliers",
                             "expected \"exact_phase\" or \"substitution\"");
                    cfg.lattice.multipliers = v;
                }
            }
    }

    if (j.contains("bose_fermi")) {
        const json& bf = j["bose_fermi"];
        if (!bf.is_object()) fail(origin, "config.bose_fermi", "expected an object");
        require_keys(bf, origin, "config.bose_fermi", {"p", "omega"});
        cfg.bose_fermi.present = true;
        if (bf.contains("p")) cfg.bose_fermi.p = get_int(bf["p"], origin, "config.bose_fermi.p");
        if (bf.contains("omega"))
            cfg.bose_fermi.omega = get_number(bf["omega"], origin, "config.bose_fermi.omega");
    }

    if (j.contains("tolerances")) {
        const json& tol = j["tolerances"];
        if (!tol.is_object()) fail(origin, "config.tolerances", "expected an object");
        require_keys(tol, origin, "config.tolerances",
                     {"route", "mixed_route", "certificate", "closure"});
        const auto read = [&](const char* key, double& slot) {
            if (tol.contains(key)) {
                slot = get_number(tol[key], origin, std::string("config.tolerances.") + key);
                if (slot <= 0.0)
                    fail(origin, std::string("config.tolerances.") + key, "must be positive");
            }
        };
        read("route", cfg.tolerances.route);
        read("mixed_route", cfg.tolerances.mixed_route);
        read("certificate", cfg.tolerances.certificate);
        read("closure", cfg.tolerances.closure);
    }

    return cfg;
}

ProblemConfig load_config(const std::string& path) { return parse_config(slurp(path), path); }

LabelSet parse_labels(const std::string& text, const std::string& origin) {
    const json j = parse_json(text, origin);
    if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
    require_keys(j, origin, "labels", {"z_out", "z_in"});
    LabelSet labels;
    for (const char* key : {"z_out", "z_in"}) {
        if (!j.contains(key)) fail(origin, std::string("labels.") + key, "missing");
        const json& arr = j[key];
        if (!arr.is_array()) fail(origin, std::string("labels.") + key, "expected an array");
        auto& slot = key == std::string("z_out") ? labels.z_out : labels.z_in;
        for (std::size_t i = 0; i < arr.size(); ++i)
            slot.push_back(get_complex(arr[i], origin,
                                       std::string("labels.") + key + "[" + std::to_string(i) + "]"));
    }
    if (labels.z_out.size() != labels.z_in.size())
        throw ConfigError(origin + ": labels.z_out and labels.z_in differ in length");
    return labels;
}

LabelSet load_labels(const std::string& path) { return parse_labels(slurp(path), path); }

std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace cfq::config
