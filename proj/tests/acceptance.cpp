// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
// --expect-fail 5,7 keeps known failures out of the exit status; they still print FAIL.

#include "hvarx/hvarx.hpp"
#include "oracles.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace hvarx;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4)
{
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

/// Random small design for the property criteria.
sim::SimDesign random_design(std::mt19937_64& rng, int max_k, int max_m, int max_order, Index T)
{
    std::uniform_int_distribution<int> kd(1, max_k), md(0, max_m), od(1, max_order);
    const int k = kd(rng), m = md(rng);
    const int p = od(rng), s = m > 0 ? od(rng) : 0;
    auto d = sim::random_sparse_design(k, m, p, s, std::max(p, std::max(s, 1)), 0.5, rng(), T);
    return d;
}

/// True when some lag below the largest nonzero lag is exactly zero.
bool has_interior_zero(const Vector& w)
{
    Index L = 0;
    for (Index j = w.size() - 1; j >= 0; --j)
        if (w(j) != 0.0) {
            L = j + 1;
            break;
        }
    for (Index j = 0; j < L; ++j)
        if (w(j) == 0.0) return true;
    return false;
}

int interior_zero_paths(const CoefficientSet& c)
{
    const Index k = c.k(), m = c.m();
    int bad = 0;
    for (Index i = 0; i < c.equations(); ++i) {
        for (Index d = 0; d < k; ++d) {
            Vector w(c.spec.p);
            for (int l = 1; l <= c.spec.p; ++l) w(l - 1) = c.phi(i, d, l);
            bad += has_interior_zero(w);
        }
        for (Index r = 0; r < m; ++r) {
            Vector w(c.spec.s);
            for (int l = 1; l <= c.spec.s; ++l) w(l - 1) = c.b(i, r, l);
            bad += has_interior_zero(w);
        }
    }
    return bad;
}

// 1. Prox against a dual block-coordinate minimizer.
Outcome prox_oracle()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<int> qd(1, 6);
    std::uniform_real_distribution<double> u(0.0, 1.0), logscale(-1.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    const int reps = 1000;
    double worst = 0.0;
    for (int r = 0; r < reps; ++r) {
        const Index q = qd(rng);
        const double scale = std::pow(10.0, logscale(rng));
        Vector v(q);
        for (Index i = 0; i < q; ++i) v(i) = scale * n(rng);
        const double tau = 3.0 * v.norm() * u(rng);
        const Vector got = prox::prox_hier_suffix(v, tau);
        const Vector ref = oracle::dual_bcd_suffix_prox(v, tau);
        worst = std::max(worst, (got - ref).cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-6 && secs < 60.0,
            std::to_string(reps) + " instances, max |diff| = " + fmt(worst) + " (tol 1e-6), " + fmt(secs, 3) + " s"};
}

// 2. No interior zeros in any fitted hierarchical path.
Outcome hierarchy_invariant()
{
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> logfrac(-3.0, 0.0);
    std::uniform_int_distribution<Index> Td(50, 150);
    const int fits = 120;
    int violations = 0, paths = 0, nonzero_paths = 0;
    for (int f = 0; f < fits; ++f) {
        auto d = random_design(rng, 5, 3, 6, Td(rng));
        const auto data = sim::generate(d).data;
        const auto cf = build_compact(data, VarxSpec{d.p, d.s});
        const auto lm = lambda_max(cf, PenaltyKind::hierarchical);
        SolverConfig c;
        c.lambda_phi = lm.phi * std::pow(10.0, logfrac(rng));
        c.lambda_b = lm.b * std::pow(10.0, logfrac(rng));
        const auto res = fit(cf, c);
        violations += interior_zero_paths(res.coefficients);
        paths += int(d.k * (d.k + d.m));
        nonzero_paths += int((extract_lag_matrices(res.coefficients).L_phi.array() > 0).count() +
                             (extract_lag_matrices(res.coefficients).L_b.array() > 0).count());
    }
    return {violations == 0, std::to_string(fits) + " fits, " + std::to_string(paths) + " paths (" +
                                 std::to_string(nonzero_paths) + " nonzero), " + std::to_string(violations) +
                                 " interior-zero violations"};
}

// 3. Stationarity of hierarchical fits and l1 against coordinate descent.
Outcome solver_optimality()
{
    std::mt19937_64 rng(3003);
    std::uniform_real_distribution<double> frac(0.05, 0.8);
    std::uniform_int_distribution<Index> Td(40, 100);
    double worst_kkt = 0.0, worst_l1 = 0.0;
    int nonconverged = 0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        auto d = random_design(rng, 2, 2, 2, Td(rng));
        const auto data = sim::generate(d).data;
        const auto cf = build_compact(data, VarxSpec{d.p, d.s});
        const Index k = cf.k(), m = cf.m;
        const int p = cf.spec.p, s = cf.spec.s;

        SolverConfig c;
        c.tol = 1e-12;
        c.max_iter = 1000000;
        auto lm = lambda_max(cf, PenaltyKind::hierarchical);
        c.lambda_phi = frac(rng) * lm.phi;
        c.lambda_b = frac(rng) * lm.b;
        const auto hier = fit(cf, c);
        nonconverged += !hier.converged;
        for (Index i = 0; i < k; ++i) {
            Vector resid = cf.Y.row(i).transpose() - cf.Z.transpose() * hier.coefficients.Phi.row(i).transpose();
            if (m > 0) resid -= cf.X.transpose() * hier.coefficients.B.row(i).transpose();
            const Vector gphi = -cf.Z * resid;
            for (Index dd = 0; dd < k; ++dd) {
                Vector w(p), g(p);
                for (int l = 0; l < p; ++l) {
                    w(l) = hier.coefficients.Phi(i, l * k + dd);
                    g(l) = gphi(l * k + dd);
                }
                worst_kkt = std::max(worst_kkt, oracle::hier_kkt_violation(w, g, c.lambda_phi));
            }
            if (m > 0) {
                const Vector gb = -cf.X * resid;
                for (Index rr = 0; rr < m; ++rr) {
                    Vector w(s), g(s);
                    for (int l = 0; l < s; ++l) {
                        w(l) = hier.coefficients.B(i, l * m + rr);
                        g(l) = gb(l * m + rr);
                    }
                    worst_kkt = std::max(worst_kkt, oracle::hier_kkt_violation(w, g, c.lambda_b));
                }
            }
        }

        c.penalty = PenaltyKind::l1;
        lm = lambda_max(cf, PenaltyKind::l1);
        c.lambda_phi = frac(rng) * lm.phi;
        c.lambda_b = frac(rng) * lm.b;
        const auto l1 = fit(cf, c);
        nonconverged += !l1.converged;
        Matrix Zt(cf.Z.rows() + cf.X.rows(), cf.N());
        Zt.topRows(cf.Z.rows()) = cf.Z;
        if (m > 0) Zt.bottomRows(cf.X.rows()) = cf.X;
        Vector lam(Zt.rows());
        lam.head(cf.Z.rows()).setConstant(c.lambda_phi);
        lam.tail(cf.X.rows()).setConstant(c.lambda_b);
        for (Index i = 0; i < k; ++i) {
            const Vector ref = oracle::lasso_cd(Zt, cf.Y.row(i).transpose(), lam);
            Vector got(Zt.rows());
            got.head(cf.Z.rows()) = l1.coefficients.Phi.row(i).transpose();
            got.tail(cf.X.rows()) = l1.coefficients.B.row(i).transpose();
            worst_l1 = std::max(worst_l1, (got - ref).cwiseAbs().maxCoeff());
        }
    }
    return {worst_kkt <= 1e-4 && worst_l1 <= 1e-6 && nonconverged == 0,
            std::to_string(reps) + " instances, max stationarity violation = " + fmt(worst_kkt) +
                " (tol 1e-4), max l1 vs coordinate descent = " + fmt(worst_l1) + " (tol 1e-6), nonconverged = " +
                std::to_string(nonconverged)};
}

// 4. Exact zeros just above lambda_max.
Outcome lambda_max_contract()
{
    std::mt19937_64 rng(4004);
    std::uniform_int_distribution<Index> Td(30, 150);
    int nonzero_fits = 0, total = 0;
    for (int r = 0; r < 100; ++r) {
        auto d = random_design(rng, 5, 3, 6, Td(rng));
        const auto data = sim::generate(d).data;
        const auto cf = build_compact(data, VarxSpec{d.p, d.s});
        for (auto kind : {PenaltyKind::hierarchical, PenaltyKind::l1}) {
            const auto lm = lambda_max(cf, kind);
            SolverConfig c;
            c.penalty = kind;
            c.lambda_phi = 1.01 * lm.phi;
            c.lambda_b = 1.01 * lm.b;
            const auto res = fit(cf, c);
            nonzero_fits += !(res.coefficients.Phi.isZero(0.0) && res.coefficients.B.isZero(0.0));
            ++total;
        }
    }
    return {nonzero_fits == 0, std::to_string(total) + " fits (100 instances x 2 penalties), " +
                                   std::to_string(nonzero_fits) + " with a nonzero coefficient"};
}

struct PenaltyRun {
    double msfe = 0.0;
    double bic = 0.0;
    LagMatrices lags;
};

PenaltyRun run_penalty(const VarxDataset& data, const VarxSpec& spec, PenaltyKind kind)
{
    SolverConfig sc;
    sc.penalty = kind;
    const auto grid = default_grid(data, spec, kind);
    const auto cv = cross_validate(data, spec, grid, sc);
    sc.lambda_phi = cv.best_lambda_phi;
    sc.lambda_b = cv.best_lambda_b;
    PenaltyRun out;
    out.msfe = expanding_window_eval(data, spec, sc).msfe;
    const auto cf = build_compact(data, spec);
    const auto full = fit(cf, sc);
    out.bic = bic(full, cf).value;
    out.lags = extract_lag_matrices(full.coefficients);
    return out;
}

struct MonteCarlo {
    int reps = 20;
    double mean_exceed_fraction = 0.0;
    int msfe_wins = 0;
    int bic_wins = 0;
    std::vector<double> msfe_h, msfe_l, bic_h, bic_l;
};

// Shared study for criteria 5 to 7: k=4, m=2, p=s=6, true lags <= 2, T=200.
MonteCarlo monte_carlo()
{
    MonteCarlo mc;
    const std::uint64_t base = 5000;
    double sum_frac = 0.0;
    for (int r = 0; r < mc.reps; ++r) {
        const auto d = sim::random_sparse_design(4, 2, 6, 6, 2, 0.2, sim::replication_seed(base, std::uint64_t(r)), 200);
        const auto data = sim::generate(d).data;
        const VarxSpec spec{6, 6};
        const auto h = run_penalty(data, spec, PenaltyKind::hierarchical);
        const auto l = run_penalty(data, spec, PenaltyKind::l1);
        const Index entries = h.lags.L_phi.size() + h.lags.L_b.size();
        const Index exceed = (h.lags.L_phi.array() > d.true_lag_phi.array() + 1).count() +
                             (h.lags.L_b.array() > d.true_lag_b.array() + 1).count();
        sum_frac += double(exceed) / double(entries);
        mc.msfe_wins += h.msfe <= l.msfe;
        mc.bic_wins += h.bic <= l.bic;
        mc.msfe_h.push_back(h.msfe);
        mc.msfe_l.push_back(l.msfe);
        mc.bic_h.push_back(h.bic);
        mc.bic_l.push_back(l.bic);
    }
    mc.mean_exceed_fraction = sum_frac / mc.reps;
    return mc;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

// 8. DM size under equal predictive accuracy.
Outcome dm_size()
{
    std::mt19937_64 rng(8008);
    std::normal_distribution<double> n(0.0, 1.0);
    const int reps = 1000;
    int reject = 0;
    Matrix a(4, 50), b(4, 50);
    for (int r = 0; r < reps; ++r) {
        for (Index i = 0; i < a.size(); ++i) a(i) = n(rng);
        for (Index i = 0; i < b.size(); ++i) b(i) = n(rng);
        reject += diebold_mariano(a, b).pvalue < 0.05;
    }
    const double rate = double(reject) / reps;
    return {rate >= 0.02 && rate <= 0.09,
            "rejection rate " + fmt(rate) + " over " + std::to_string(reps) + " replications (need [0.02, 0.09])"};
}

int shell(const std::string& cmd)
{
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

std::string cli_command(const std::string& args, const fs::path& log)
{
    return std::string(HVARX_CLI_PATH) + " " + args + " 2>> " + log.string() + " > /dev/null";
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string without_metadata(const fs::path& report)
{
    auto j = nlohmann::json::parse(slurp(report));
    j.erase("metadata");
    return j.dump(2);
}

// 9. Two identical CLI pipelines give identical reports.
Outcome determinism(const fs::path& root)
{
    std::vector<int> codes;
    for (const char* name : {"run1", "run2"}) {
        const fs::path dir = root / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
        const fs::path log = dir / "stderr.log";
        const std::string data = " --endo " + (dir / "endo.csv").string() + " --exog " + (dir / "exog.csv").string();
        codes.push_back(shell(cli_command("simulate --seed 17 --sim-k 4 --sim-m 2 --sim-T 120 -o " + dir.string(), log)));
        codes.push_back(shell(cli_command("cv" + data + " -p 4 -s 4 --threads 2 -o " + (dir / "cv").string(), log)));
        codes.push_back(shell(cli_command("evaluate" + data + " -p 4 -s 4 --threads 2 -o " + (dir / "eval").string(), log)));
    }
    for (int c : codes)
        if (c != 0) return {false, "a CLI stage exited with status " + std::to_string(c)};

    int compared = 0, differing = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "run1")) {
        if (!entry.is_regular_file() || entry.path().filename() == "stderr.log") continue;
        const fs::path rel = fs::relative(entry.path(), root / "run1");
        const fs::path other = root / "run2" / rel;
        ++compared;
        if (!fs::exists(other)) {
            ++differing;
            continue;
        }
        if (entry.path().filename() == "report.json") {
            differing += without_metadata(entry.path()) != without_metadata(other);
        } else {
            differing += slurp(entry.path()) != slurp(other);
        }
    }
    return {differing == 0 && compared > 0,
            "simulate + cv + evaluate twice, " + std::to_string(compared) + " artifacts compared, " +
                std::to_string(differing) + " differ (report.json compared without metadata)"};
}

// 10. Full-size cv + evaluate on a k=16, m=32, T=76 instance.
Outcome scale_smoke(const fs::path& root)
{
    const fs::path dir = root / "scale";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path log = dir / "stderr.log";
    const int sim = shell(cli_command("simulate --seed 76 --sim-k 16 --sim-m 32 --sim-T 76 --sim-order 13 "
                                      "--sim-max-lag 2 --sim-density 0.1 -o " + dir.string(), log));
    if (sim != 0) return {false, "simulate exited with status " + std::to_string(sim)};
    const std::string data = " --endo " + (dir / "endo.csv").string() + " --exog " + (dir / "exog.csv").string();
    const auto t0 = Clock::now();
    const int cv = shell(cli_command("cv" + data + " -o " + (dir / "cv").string(), log));
    const int ev = shell(cli_command("evaluate" + data + " -o " + (dir / "eval").string(), log));
    const double secs = seconds_since(t0);
    const bool ran = (cv == 0 || cv == 2) && (ev == 0 || ev == 2) && fs::exists(dir / "eval" / "report.json");
    int p = -1, s = -1;
    if (ran) {
        const auto j = nlohmann::json::parse(slurp(dir / "eval" / "report.json"));
        p = j["orders"]["p"].get<int>();
        s = j["orders"]["s"].get<int>();
    }
    return {ran && secs < 600.0 && p == 13 && s == 13,
            "cv exit " + std::to_string(cv) + ", evaluate exit " + std::to_string(ev) + ", orders p=" +
                std::to_string(p) + " s=" + std::to_string(s) + ", " + fmt(secs, 4) + " s (limit 600 s)"};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> expected;
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--expect-fail" && a + 1 < argc) {
            std::stringstream list(argv[++a]);
            for (std::string item; std::getline(list, item, ',');) expected.insert(std::stoi(item));
        } else {
            std::cerr << "usage: hvarx_acceptance [--expect-fail N,M,...]\n";
            return 2;
        }
    }

    const fs::path root = fs::temp_directory_path() / "hvarx_acceptance";
    fs::create_directories(root);
    int failures = 0, known = 0;
    auto report = [&](int id, const std::string& name, const Outcome& o) {
        const bool listed = expected.count(id) > 0;
        std::cout << "AC" << id << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << name << ": " << o.detail;
        if (listed) std::cout << (o.pass ? " [listed as expected failure]" : " [known failure]");
        std::cout << std::endl;
        if (!o.pass && listed) ++known;
        else failures += !o.pass;
    };

    report(1, "prox oracle equivalence", prox_oracle());
    report(2, "hierarchy invariant", hierarchy_invariant());
    report(3, "solver optimality", solver_optimality());
    report(4, "lambda_max contract", lambda_max_contract());

    const auto t0 = Clock::now();
    const auto mc = monte_carlo();
    const std::string study = " (" + fmt(seconds_since(t0), 3) + " s for the 20-replication study)";
    report(5, "lag recovery",
           {mc.mean_exceed_fraction <= 0.10,
            "mean fraction of lag entries exceeding truth by more than 1 = " + fmt(mc.mean_exceed_fraction) +
                " (limit 0.10)" + study});
    report(6, "forecast comparison",
           {mc.msfe_wins >= 14, "hvarx MSFE <= l1 MSFE in " + std::to_string(mc.msfe_wins) +
                                    "/20 replications (need 14); mean MSFE hvarx " + fmt(mean(mc.msfe_h)) +
                                    ", l1 " + fmt(mean(mc.msfe_l))});
    report(7, "BIC direction",
           {mc.bic_wins >= 14, "hvarx BIC <= l1 BIC in " + std::to_string(mc.bic_wins) +
                                   "/20 replications (need 14); mean BIC hvarx " + fmt(mean(mc.bic_h)) + ", l1 " +
                                   fmt(mean(mc.bic_l))});
    report(8, "DM test size", dm_size());
    report(9, "determinism", determinism(root));
    report(10, "full-scale smoke test", scale_smoke(root));

    std::cout << failures << " unexpected failures, " << known << " known failures" << std::endl;
    return failures == 0 ? 0 : 1;
}
