// Command-line front end: named verification suites, model kernels evaluated
// along selectable routes, and constraint classification from JSON configs.
// Exit codes: 0 success, 1 verification failure, 2 usage or config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfq/checks.hpp"
#include "cfq/config.hpp"
#include "cfq/constraints.hpp"
#include "cfq/lattice.hpp"
#include "cfq/propagators.hpp"
#include "cfq/report.hpp"
#include "cfq/version.hpp"

namespace {

using cfq::coherent::CoherentVector;
using cfq::coherent::ModeSet;
using cfq::coherent::SymbolicOperator;
using cfq::fock::FockOperator;
using cfq::grassmann::GrassmannElement;
using cfq::grassmann::complexd;
using cfq::propagators::KernelContext;

namespace coherent = cfq::coherent;
namespace config = cfq::config;
namespace constraints = cfq::constraints;
namespace fock = cfq::fock;
namespace grassmann = cfq::grassmann;
namespace lattice = cfq::lattice;
namespace propagators = cfq::propagators;

constexpr int exit_ok = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;

fock::OperatorPolynomial number_sum_poly(int n, double scale, double level) {
    fock::OperatorPolynomial poly;
    for (int i = 1; i <= n; ++i) poly.terms.push_back({{scale, 0.0}, {i}, {i}, {}, {}});
    if (level != 0.0) poly.terms.push_back({{-level, 0.0}, {}, {}, {}, {}});
    return poly;
}

// 1 - sum n_i + sum_{i<j} n_i n_j: 1 on the empty and full states.
fock::OperatorPolynomial empty_or_full_poly(int n) {
    fock::OperatorPolynomial poly;
    poly.terms.push_back({{1.0, 0.0}, {}, {}, {}, {}});
    for (int i = 1; i <= n; ++i) poly.terms.push_back({{-1.0, 0.0}, {i}, {i}, {}, {}});
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            poly.terms.push_back({{-1.0, 0.0}, {i, j}, {i, j}, {}, {}});
    return poly;
}

struct ShiftedSector {
    SymbolicOperator e_sym;
    GrassmannElement h_reduced;
    ModeSet theta;
};

// Adds the reference pair to the context registry and builds the sector
// projector with its reduced Hamiltonian.
ShiftedSector make_shifted(const KernelContext& ctx, double omega, bool even_sector) {
    const ModeSet theta = coherent::add_conjugate_modes(*ctx.reg, "θ", 1, "");
    Eigen::MatrixXcd number(2, 2);
    number << 0.0, 0.0, 0.0, omega;
    const SymbolicOperator hsym = SymbolicOperator::from_numeric(ctx.reg, number);
    const CoherentVector ket = even_sector ? coherent::coherent_ket(ctx.reg, theta)
                                           : coherent::odd_coherent_ket(ctx.reg, theta);
    const CoherentVector bra = even_sector ? coherent::coherent_bra(ctx.reg, theta)
                                           : coherent::odd_coherent_bra(ctx.reg, theta);
    const SymbolicOperator e = SymbolicOperator::outer(ket, bra);
    return {e, propagators::reduced_hamiltonian(e, hsym, bra, ket), theta};
}

struct KernelParams {
    double t = 0.7;
    int p = 0;
    double omega = 1.0;
    int n_slices = 4;
    config::LabelSet labels;
};

struct KernelSetup {
    KernelContext ctx;
    std::function<GrassmannElement(const std::string&)> eval;
    double tolerance = propagators::route_tolerance;
};

[[noreturn]] void reject_route(const std::string& route) {
    throw std::invalid_argument("unknown route \"" + route +
                                "\" (expected operator, closed-form, or lattice)");
}

KernelSetup make_setup(const std::string& example, const KernelParams& prm) {
    KernelSetup setup;

    if (example == "two_mode" || example == "three_mode") {
        const int n = example == "two_mode" ? 2 : 3;
        const fock::HilbertSpec spec{n, 0, 0};
        const fock::OperatorPolynomial phi_poly =
            n == 2 ? number_sum_poly(2, 1.0, 1.0) : empty_or_full_poly(3);
        const FockOperator e =
            constraints::project_group_average({fock::realize(phi_poly, spec)});
        const fock::OperatorPolynomial h_poly = number_sum_poly(n, prm.omega, 0.0);
        const FockOperator h = fock::realize(h_poly, spec);
        const KernelContext ctx = propagators::make_kernel_context(n);
        setup.ctx = ctx;
        setup.eval = [=](const std::string& route) {
            if (route == "operator")
                return propagators::kernel_operator_route(e, h, prm.t, ctx);
            if (route == "closed-form")
                return n == 2 ? propagators::closed_form_two_mode_single_occupancy(
                                    ctx, prm.omega, prm.t)
                              : propagators::closed_form_three_mode_partial_fill(ctx, prm.omega,
                                                                                 prm.t);
            if (route == "lattice") {
                lattice::LatticePlan plan;
                plan.n_slices = prm.n_slices;
                plan.t = prm.t;
                plan.slices = lattice::SliceStyle::exact;
                return lattice::lattice_kernel_first_class(e, h_poly, plan, ctx);
            }
            reject_route(route);
        };
        return setup;
    }

    if (example == "shifted_even" || example == "shifted_odd") {
        const bool even_sector = example == "shifted_even";
        const KernelContext ctx = propagators::make_kernel_context(1);
        const ShiftedSector sector = make_shifted(ctx, prm.omega, even_sector);
        setup.ctx = ctx;
        setup.eval = [=](const std::string& route) {
            if (route == "operator")
                return propagators::kernel_rank_one_route(sector.e_sym, sector.h_reduced, prm.t,
                                                          ctx);
            if (route == "closed-form")
                return even_sector ? propagators::closed_form_shifted_even_sector(
                                         ctx, sector.theta, prm.omega, prm.t)
                                   : propagators::closed_form_shifted_odd_sector(
                                         ctx, sector.theta, prm.omega, prm.t);
            if (route == "lattice") {
                lattice::LatticePlan plan;
                plan.n_slices = prm.n_slices;
                plan.t = prm.t;
                return lattice::lattice_kernel_second_class(
                    [&](const KernelContext& run) {
                        const ShiftedSector s = make_shifted(run, prm.omega, even_sector);
                        return lattice::SectorModel{s.e_sym, s.h_reduced};
                    },
                    plan, ctx);
            }
            reject_route(route);
        };
        return setup;
    }

    if (example == "balanced_even" || example == "balanced_odd") {
        const bool even_sector = example == "balanced_even";
        const fock::HilbertSpec spec{2, 0, 0};
        fock::OperatorPolynomial comb;
        const double r = 1.0 / std::numbers::sqrt2;
        comb.terms.push_back({{r, 0.0}, {}, {1}, {}, {}});
        comb.terms.push_back({{-r, 0.0}, {}, {2}, {}, {}});
        const auto sectors = constraints::project_odd_pair(fock::realize(comb, spec));
        const FockOperator e = even_sector ? sectors.e_a : sectors.e_b;
        const FockOperator h0{spec, fock::Matrix::Zero(4, 4), fock::OpParity::even};
        const KernelContext ctx = propagators::make_kernel_context(2);
        setup.ctx = ctx;
        setup.eval = [=](const std::string& route) {
            if (route == "operator")
                return propagators::kernel_operator_route(e, h0, prm.t, ctx);
            if (route == "closed-form")
                return even_sector ? propagators::closed_form_balanced_difference_even(ctx)
                                   : propagators::closed_form_balanced_difference_odd(ctx);
            if (route == "lattice") {
                lattice::LatticePlan plan;
                plan.n_slices = prm.n_slices;
                plan.t = prm.t;
                const fock::Matrix e_mat = e.matrix;
                return lattice::lattice_kernel_second_class(
                    [&](const KernelContext& run) {
                        return lattice::SectorModel{
                            SymbolicOperator::from_numeric(run.reg, e_mat),
                            GrassmannElement(run.reg)};
                    },
                    plan, ctx);
            }
            reject_route(route);
        };
        return setup;
    }

    if (example == "bose_fermi") {
        propagators::BoseFermiModel model;
        model.n_bosons = 1;
        model.n_fermions = 1;
        model.p = prm.p;
        model.omega = prm.omega;
        model.cutoff = 6;
        std::vector<complexd> z_out{{0.4, 0.3}};
        std::vector<complexd> z_in{{-0.2, 0.5}};
        if (!prm.labels.z_out.empty()) {
            z_out = prm.labels.z_out;
            z_in = prm.labels.z_in;
        }
        const KernelContext ctx = propagators::make_kernel_context(1);
        setup.ctx = ctx;
        setup.tolerance = propagators::mixed_route_tolerance;
        setup.eval = [=](const std::string& route) {
            if (route == "operator") {
                const FockOperator e = constraints::project_group_average(
                    {propagators::bose_fermi_constraint(model)});
                const FockOperator u = propagators::constrained_evolution(
                    e, propagators::bose_fermi_hamiltonian(model), prm.t);
                return propagators::mixed_kernel_operator_route(u, z_out, z_in, ctx);
            }
            if (route == "closed-form")
                return propagators::bose_fermi_kernel_quadrature(model, z_out, z_in, prm.t,
                                                                 ctx);
            if (route == "lattice")
                return lattice::bose_fermi_kernel_lattice(model, z_out, z_in, prm.t,
                                                          prm.n_slices, ctx);
            reject_route(route);
        };
        return setup;
    }

    throw std::invalid_argument(
        "unknown example \"" + example +
        "\" (expected two_mode, three_mode, shifted_even, shifted_odd, balanced_even, "
        "balanced_odd, or bose_fermi)");
}

int run_verify(const std::string& suite, const std::string& json_path, int n_seeds,
               std::uint64_t seed) {
    if (!cfq::checks::is_suite(suite)) {
        std::fprintf(stderr, "error: unknown suite \"%s\"\n", suite.c_str());
        return exit_usage;
    }
    const cfq::report::RunReport r = cfq::checks::run_suite(suite, n_seeds, seed);
    std::fputs(cfq::report::to_text(r).c_str(), stdout);
    if (!json_path.empty()) cfq::report::write_json_file(r, json_path);
    return r.all_pass() ? exit_ok : exit_fail;
}

int run_kernel(const std::string& example, const KernelParams& prm, const std::string& route,
               const std::string& compare_route, const std::string& json_path) {
    const KernelSetup setup = make_setup(example, prm);
    const GrassmannElement k1 = setup.eval(route);
    std::printf("example %s, t = %g, route %s:\n%s\n", example.c_str(), prm.t, route.c_str(),
                grassmann::to_string(k1).c_str());

    double deviation = 0.0;
    if (!compare_route.empty()) {
        const GrassmannElement k2 = setup.eval(compare_route);
        std::printf("route %s:\n%s\n", compare_route.c_str(),
                    grassmann::to_string(k2).c_str());
        deviation = grassmann::max_coeff_distance(k1, k2);
        std::printf("max deviation %.3e (tolerance %.1e)\n", deviation, setup.tolerance);
    }

    if (!json_path.empty()) {
        nlohmann::ordered_json j;
        j["example"] = example;
        j["t"] = prm.t;
        j["p"] = prm.p;
        j["omega"] = prm.omega;
        j["n_slices"] = prm.n_slices;
        j["route"] = route;
        j["kernel"] = grassmann::to_string(k1);
        if (!compare_route.empty()) {
            j["compare_route"] = compare_route;
            j["max_deviation"] = deviation;
            j["tolerance"] = setup.tolerance;
        }
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw std::runtime_error(json_path + ": cannot open for writing");
        out << j.dump(2) << "\n";
    }
    return (compare_route.empty() || deviation <= setup.tolerance) ? exit_ok : exit_fail;
}

int run_classify(const std::string& path, const std::string& json_path) {
    const config::ProblemConfig cfg = config::load_config(path);
    if (cfg.even_constraints.empty() && cfg.odd_constraints.empty()) {
        std::fprintf(stderr, "error: %s: config declares no constraints\n", path.c_str());
        return exit_usage;
    }

    std::vector<FockOperator> evens, odds;
    for (const auto& poly : cfg.even_constraints)
        evens.push_back(fock::realize(poly, cfg.spec));
    for (const auto& poly : cfg.odd_constraints) odds.push_back(fock::realize(poly, cfg.spec));
    std::optional<FockOperator> h;
    if (!cfg.hamiltonian.terms.empty()) h = fock::realize(cfg.hamiltonian, cfg.spec);

    const auto report =
        constraints::classify(evens, odds, h ? &*h : nullptr, cfg.tolerances.closure);
    const char* verdict = report.verdict == constraints::ConstraintClass::first_class
                              ? "first class"
                              : "second class";

    std::printf("classification for \"%s\" (%s)\n", cfg.example.c_str(), path.c_str());
    std::printf("  %-14s %-11s coefficients\n", "bracket", "residual");
    for (const auto& b : report.brackets) {
        std::string coeffs;
        for (const complexd& c : b.coefficients) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s(%.6g, %.6g)", coeffs.empty() ? "" : "  ",
                          c.real(), c.imag());
            coeffs += buf;
        }
        std::printf("  %-14s %-11.3e %s\n", b.label.c_str(), b.residual, coeffs.c_str());
    }
    std::printf("verdict: %s (worst residual %.3e, tolerance %.1e)\n", verdict,
                report.worst_residual, cfg.tolerances.closure);
    if (h)
        std::printf("hamiltonian: %s (worst residual %.3e)\n",
                    report.hamiltonian_compatible ? "compatible" : "incompatible",
                    report.worst_hamiltonian_residual);

    if (!json_path.empty()) {
        nlohmann::ordered_json j;
        j["example"] = cfg.example;
        j["verdict"] = verdict;
        j["worst_residual"] = report.worst_residual;
        j["closure_tolerance"] = cfg.tolerances.closure;
        if (h) {
            j["hamiltonian_compatible"] = report.hamiltonian_compatible;
            j["worst_hamiltonian_residual"] = report.worst_hamiltonian_residual;
        }
        j["brackets"] = nlohmann::ordered_json::array();
        for (const auto& b : report.brackets) {
            nlohmann::ordered_json jb;
            jb["label"] = b.label;
            jb["residual"] = b.residual;
            jb["coefficients"] = nlohmann::ordered_json::array();
            for (const complexd& c : b.coefficients)
                jb["coefficients"].push_back({c.real(), c.imag()});
            j["brackets"].push_back(std::move(jb));
        }
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw std::runtime_error(json_path + ": cannot open for writing");
        out << j.dump(2) << "\n";
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact coherent-state quantization toolkit for constrained fermion systems"};
    app.set_version_flag("--version", std::string("cfq ") + cfq::version);
    app.require_subcommand(1);

    std::string suite, verify_json;
    int n_seeds = 50;
    std::uint64_t seed = 12345;
    CLI::App* verify = app.add_subcommand("verify", "Run a named verification suite");
    verify
        ->add_option("suite", suite,
                     "grassmann, coherent, first-class, second-class, bose-fermi, lattice, all")
        ->required();
    verify->add_option("--json", verify_json, "Also write the report as JSON to this path");
    verify->add_option("--seeds", n_seeds, "Randomized trials per law check")
        ->check(CLI::PositiveNumber);
    verify->add_option("--seed", seed, "Random seed for the law checks");

    std::string example, route = "operator", compare_route, labels_path, kernel_json,
                         kernel_config;
    KernelParams prm;
    CLI::App* kernel = app.add_subcommand("kernel", "Evaluate a model kernel along a route");
    kernel
        ->add_option("example", example,
                     "two_mode, three_mode, shifted_even, shifted_odd, balanced_even, "
                     "balanced_odd, bose_fermi")
        ->required();
    CLI::Option* t_opt = kernel->add_option("--t", prm.t, "Evolution time");
    CLI::Option* p_opt = kernel->add_option("--p", prm.p, "Number-balance offset (bose_fermi)");
    CLI::Option* omega_opt = kernel->add_option("--omega", prm.omega, "Hamiltonian frequency");
    CLI::Option* slices_opt =
        kernel->add_option("--n-slices", prm.n_slices, "Lattice slice count")
            ->check(CLI::PositiveNumber);
    kernel->add_option("--route", route, "operator, closed-form, or lattice");
    kernel->add_option("--compare", compare_route,
                       "Second route; prints the max deviation between the two");
    kernel->add_option("--labels", labels_path,
                       "JSON file with boson coherent labels z_out / z_in");
    kernel->add_option("--config", kernel_config,
                       "Problem config supplying lattice and bose-fermi parameters");
    kernel->add_option("--json", kernel_json, "Write the result as JSON to this path");

    std::string classify_config, classify_json;
    CLI::App* classify =
        app.add_subcommand("classify", "Classify the constraint set of a problem config");
    classify->add_option("--config", classify_config, "Problem config path")->required();
    classify->add_option("--json", classify_json, "Write the table as JSON to this path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (app.got_subcommand(verify)) return run_verify(suite, verify_json, n_seeds, seed);
        if (app.got_subcommand(kernel)) {
            if (!kernel_config.empty()) {
                const config::ProblemConfig cfg = config::load_config(kernel_config);
                if (cfg.lattice.present) {
                    if (!t_opt->count()) prm.t = cfg.lattice.t;
                    if (!slices_opt->count()) prm.n_slices = cfg.lattice.n_slices;
                }
                if (cfg.bose_fermi.present) {
                    if (!p_opt->count()) prm.p = cfg.bose_fermi.p;
                    if (!omega_opt->count()) prm.omega = cfg.bose_fermi.omega;
                }
            }
            if (!labels_path.empty()) prm.labels = config::load_labels(labels_path);
            return run_kernel(example, prm, route, compare_route, kernel_json);
        }
        return run_classify(classify_config, classify_json);
    } catch (const config::ConfigError& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return exit_usage;
    } catch (const std::invalid_argument& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return exit_usage;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return exit_fail;
    }
}
