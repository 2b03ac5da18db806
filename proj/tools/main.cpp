// conystrom: verification and benchmark harness for continual attention.
//
// Subcommands:
//   verify     step a continual variant against its from-scratch reference
//   bench      measure steady-state per-step wall-clock and analytic FLOPs
//   cost       evaluate the closed-form FLOP/memory models
//   landmarks  cluster a token CSV into landmark rows
//
// Exit codes: 0 success, 1 verification/runtime failure, 2 usage or parse
// error. Every flag can also be supplied through an environment variable
// with the CONYSTROM_ prefix (e.g. CONYSTROM_SEED for --seed).
//
// Numerical caveat: kernel entries are raw exponentials exp(q k / sqrt(d));
// no max-subtraction is possible under incremental cache updates, so inputs
// must be pre-scaled. The generated streams keep every entry in [-1, 1],
// which bounds every exponent by +-sqrt(d) at any size, and cluster queries
// and keys around shared per-segment centers so that landmark kernels stay
// well conditioned at the default pseudo-inverse iteration budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conystrom/conystrom.hpp"

namespace {

using namespace conystrom;
using Clock = std::chrono::steady_clock;

struct RunConfig {
  std::string variant = "CoRe";
  std::size_t n = 16;
  std::size_t d = 8;
  std::size_t m = 0;
  std::size_t steps = 200;
  std::uint64_t seed = 1;
  std::size_t pinv_iters = 6;
  std::size_t refresh_interval = 0;  // 0 selects the per-state default (10 n)
  double tolerance = 1e-9;
  std::string output_path;
};

double rel_frobenius(const Matrix& got, const Matrix& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double diff = got.data()[i] - want.data()[i];
    num += diff * diff;
    den += want.data()[i] * want.data()[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

double rel_norm(const std::vector<double>& got, const double* want, std::size_t len) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < len; ++j) {
    const double diff = got[j] - want[j];
    num += diff * diff;
    den += want[j] * want[j];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

std::uint64_t elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

// Nearest-rank percentile on a copy of the samples.
double percentile_of(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double rank = std::ceil(q * static_cast<double>(xs.size()));
  std::size_t idx = rank <= 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  if (idx >= xs.size()) idx = xs.size() - 1;
  return xs[idx];
}

int usage_error(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return 2;
}

void emit_reports(const RunConfig& cfg, const std::vector<StreamReport>& reports) {
  if (cfg.output_path.empty())
    write_report_csv(std::cout, reports);
  else
    write_report_csv(cfg.output_path, reports);
}

bool is_single_output(Variant v) {
  return v == Variant::CoSi || v == Variant::CoNySiCont || v == Variant::CoNySiFix;
}

int validate_stream_config(const RunConfig& cfg, Variant v) {
  if (cfg.steps == 0) return usage_error("--steps must be >= 1");
  if (cfg.n == 0 || cfg.d == 0) return usage_error("--n and --d must be >= 1");
  if (!(cfg.tolerance > 0.0)) return usage_error("--tol must be > 0");
  if (cfg.pinv_iters == 0) return usage_error("--pinv-iters must be >= 1");
  if (variant_uses_landmarks(v)) {
    if (cfg.m == 0) return usage_error("--m is required for landmark variants");
    if (cfg.m > cfg.n) return usage_error("--m must not exceed --n");
  } else if (cfg.m != 0) {
    return usage_error("--m applies only to landmark variants");
  }
  return 0;
}

struct VerifyOptions {
  std::string save_state_path;
  std::string load_state_path;
  std::string q_landmarks_path;
  std::string k_landmarks_path;
};

int run_verify(const RunConfig& cfg, const VerifyOptions& opt) {
  const std::optional<Variant> vopt = parse_variant(cfg.variant);
  if (!vopt) return usage_error("unknown variant '" + cfg.variant + "'");
  const Variant v = *vopt;
  if (!variant_is_continual(v))
    return usage_error("verify drives continual variants only (CoRe, CoSi, CoNy*)");
  if (const int rc = validate_stream_config(cfg, v)) return rc;
  const bool single = is_single_output(v);
  const std::size_t n = cfg.n, d = cfg.d;

  TokenStream stream(cfg.seed, d, stream_periods(n, variant_uses_landmarks(v) ? cfg.m : 0));
  const AttentionInput warm = stream.window(n);
  RingMat mirror_q(warm.q);  // query window for the variants that drop queries

  // One state slot per kind; exactly one is engaged.
  std::optional<CoReState> core;
  std::optional<CoSiState> cosi;
  std::optional<CoNyContState> cont;
  std::optional<CoNyFixedState> fixed;

  if (!opt.load_state_path.empty()) {
    std::uint64_t steps_done = 0;
    switch (v) {
      case Variant::CoRe: {
        core.emplace();
        load_state_file(opt.load_state_path, *core);
        if (core->n() != n || core->d() != d)
          return usage_error("loaded state shape does not match --n/--d");
        steps_done = core->steps;
        break;
      }
      case Variant::CoSi: {
        cosi.emplace();
        load_state_file(opt.load_state_path, *cosi);
        if (cosi->n() != n || cosi->d() != d)
          return usage_error("loaded state shape does not match --n/--d");
        steps_done = cosi->steps;
        break;
      }
      case Variant::CoNyReCont:
      case Variant::CoNySiCont: {
        cont.emplace();
        load_state_file(opt.load_state_path, *cont);
        if (cont->n() != n || cont->d() != d || cont->m() != cfg.m)
          return usage_error("loaded state shape does not match --n/--d/--m");
        steps_done = cont->steps;
        break;
      }
      default: {
        fixed.emplace();
        load_state_file(opt.load_state_path, *fixed);
        if (fixed->n() != n || fixed->d() != d || fixed->m() != cfg.m)
          return usage_error("loaded state shape does not match --n/--d/--m");
        steps_done = fixed->steps;
        break;
      }
    }
    // Replay the stream the saved state has already consumed so the next
    // draw lines up with the snapshot.
    for (std::uint64_t i = 0; i < steps_done; ++i) {
      const TokenTriple t = stream.draw();
      mirror_q.push(t.q.data());
    }
  } else {
    switch (v) {
      case Variant::CoRe:
        core.emplace(warm, cfg.refresh_interval);
        break;
      case Variant::CoSi:
        cosi.emplace(warm);
        break;
      case Variant::CoNyReCont:
      case Variant::CoNySiCont:
        cont.emplace(warm, cfg.m, cfg.pinv_iters, cfg.refresh_interval);
        break;
      default: {
        // One clustering seed for both sides: queries and keys share cluster
        // structure, so equal seeds keep the center orders aligned and the
        // landmark kernel diagonally dominant.
        LandmarkPair lp;
        lp.q_land = opt.q_landmarks_path.empty()
                        ? kmeans_landmarks(warm.q, cfg.m, cfg.seed)
                        : read_matrix_csv(opt.q_landmarks_path);
        lp.k_land = opt.k_landmarks_path.empty()
                        ? kmeans_landmarks(warm.k, cfg.m, cfg.seed)
                        : read_matrix_csv(opt.k_landmarks_path);
        fixed.emplace(warm, lp, cfg.pinv_iters, cfg.refresh_interval);
        break;
      }
    }
  }

  const VariantCost cost(v, n, d, variant_uses_landmarks(v) ? cfg.m : 0);
  std::vector<StreamReport> reports;
  reports.reserve(cfg.steps);
  for (std::uint64_t step = 1; step <= cfg.steps; ++step) {
    const TokenTriple t = stream.draw();
    bool updated = false;
    Matrix out_mat;
    std::vector<double> out_vec;
    const Clock::time_point t0 = Clock::now();
    switch (v) {
      case Variant::CoRe:
        core->push(t);
        out_mat = core->retroactive();
        break;
      case Variant::CoSi:
        out_vec = cosi->step(t);
        break;
      case Variant::CoNyReCont:
        updated = cont->push(t);
        out_mat = cont->retroactive();
        break;
      case Variant::CoNySiCont:
        updated = cont->push(t);
        out_vec = cont->newest();
        break;
      case Variant::CoNyReFix:
        fixed->push(t);
        out_mat = fixed->retroactive();
        break;
      default:
        fixed->push(t);
        out_vec = fixed->newest();
        break;
    }
    const Clock::time_point t1 = Clock::now();
    mirror_q.push(t.q.data());

    // From-scratch reference on the current window (and current landmarks).
    Matrix oracle;
    switch (v) {
      case Variant::CoRe: {
        AttentionInput win(core->q_win.to_matrix(), core->k_win.to_matrix(),
                           core->v_win.to_matrix());
        oracle = sda_exact(win);
        break;
      }
      case Variant::CoSi: {
        AttentionInput win(mirror_q.to_matrix(), cosi->k_win.to_matrix(),
                           cosi->v_win.to_matrix());
        oracle = sda_exact(win);
        break;
      }
      case Variant::CoNyReCont:
      case Variant::CoNySiCont: {
        AttentionInput win(cont->q_win.to_matrix(), cont->k_win.to_matrix(),
                           cont->v_win.to_matrix());
        oracle = sda_nystrom(win, cont->q_land, cont->k_land, cont->pinv_iters);
        break;
      }
      default: {
        AttentionInput win(mirror_q.to_matrix(), fixed->k_win.to_matrix(),
                           fixed->v_win.to_matrix());
        oracle = sda_nystrom_fixed(win, fixed->q_land, fixed->k_land, fixed->gamma_pinv);
        break;
      }
    }
    const double rel = single ? rel_norm(out_vec, oracle.row(n - 1), d)
                              : rel_frobenius(out_mat, oracle);
    StreamReport r;
    r.step = step;
    r.rel_error = rel;
    r.flops_analytic = variant_is_scheduled(v)
                           ? (updated ? cost.flops() : cost.flops_nonupdated())
                           : cost.flops();
    r.wall_ns = elapsed_ns(t0, t1);
    r.landmark_updated = updated;
    reports.push_back(r);
    if (!(rel <= cfg.tolerance)) {
      emit_reports(cfg, reports);
      std::cerr << "verification failed at step " << step << ": rel_error "
                << format_double(rel) << " exceeds tolerance " << format_double(cfg.tolerance)
                << "\n";
      return 1;
    }
  }
  emit_reports(cfg, reports);
  if (!opt.save_state_path.empty()) {
    if (core) save_state_file(opt.save_state_path, *core);
    if (cosi) save_state_file(opt.save_state_path, *cosi);
    if (cont) save_state_file(opt.save_state_path, *cont);
    if (fixed) save_state_file(opt.save_state_path, *fixed);
  }
  return 0;
}

struct BenchSummary {
  std::size_t n = 0;
  std::size_t steps = 0;
  double mean_wall_ns = 0.0;
  double p50_wall_ns = 0.0;
  double p95_wall_ns = 0.0;
  double mean_flops = 0.0;
};

// One steady-state measurement cell: n warm-up steps untimed, then
// cfg.steps timed steps of the variant (continual states step in place;
// batch variants recompute on the slid window each step).
BenchSummary bench_cell(const RunConfig& cfg, Variant v, std::size_t n,
                        std::vector<StreamReport>* per_step) {
  const std::size_t d = cfg.d, m = variant_uses_landmarks(v) ? cfg.m : 0;
  TokenStream stream(cfg.seed, d, stream_periods(n, m));
  const AttentionInput warm = stream.window(n);
  const VariantCost cost(v, n, d, m);

  std::optional<CoReState> core;
  std::optional<CoSiState> cosi;
  std::optional<CoNyContState> cont;
  std::optional<CoNyFixedState> fixed;
  RingMat win_q(warm.q), win_k(warm.k), win_v(warm.v);  // batch variants
  Matrix batch_q_land, batch_k_land, batch_gamma_pinv;  // NyFix

  switch (v) {
    case Variant::CoRe:
      core.emplace(warm, cfg.refresh_interval);
      break;
    case Variant::CoSi:
      cosi.emplace(warm);
      break;
    case Variant::CoNyReCont:
    case Variant::CoNySiCont:
      cont.emplace(warm, m, cfg.pinv_iters, cfg.refresh_interval);
      break;
    case Variant::CoNyReFix:
    case Variant::CoNySiFix: {
      LandmarkPair lp;
      lp.q_land = kmeans_landmarks(warm.q, m, cfg.seed);
      lp.k_land = kmeans_landmarks(warm.k, m, cfg.seed);
      fixed.emplace(warm, lp, cfg.pinv_iters, cfg.refresh_interval);
      break;
    }
    case Variant::NyFix: {
      batch_q_land = kmeans_landmarks(warm.q, m, cfg.seed);
      batch_k_land = kmeans_landmarks(warm.k, m, cfg.seed);
      Matrix gamma = rho(batch_q_land, batch_k_land, d);
      batch_gamma_pinv = pinv_iterative(row_scale(gamma, phi(gamma)), cfg.pinv_iters);
      break;
    }
    default:
      break;
  }

  std::vector<StreamReport> reports;
  reports.reserve(cfg.steps);
  const std::size_t total = n + cfg.steps;  // n warm-up steps, then measured
  for (std::size_t i = 0; i < total; ++i) {
    const TokenTriple t = stream.draw();
    const bool measured = i >= n;
    bool updated = false;
    std::uint64_t ns = 0;
    if (variant_is_continual(v)) {
      const Clock::time_point t0 = Clock::now();
      switch (v) {
        case Variant::CoRe: {
          core->push(t);
          volatile double sink = core->retroactive()(0, 0);
          (void)sink;
          break;
        }
        case Variant::CoSi: {
          volatile double sink = cosi->step(t)[0];
          (void)sink;
          break;
        }
        case Variant::CoNyReCont: {
          updated = cont->push(t);
          volatile double sink = cont->retroactive()(0, 0);
          (void)sink;
          break;
        }
        case Variant::CoNySiCont: {
          updated = cont->push(t);
          volatile double sink = cont->newest()[0];
          (void)sink;
          break;
        }
        case Variant::CoNyReFix: {
          fixed->push(t);
          volatile double sink = fixed->retroactive()(0, 0);
          (void)sink;
          break;
        }
        default: {
          fixed->push(t);
          volatile double sink = fixed->newest()[0];
          (void)sink;
          break;
        }
      }
      ns = elapsed_ns(t0, Clock::now());
    } else {
      win_q.push(t.q.data());
      win_k.push(t.k.data());
      win_v.push(t.v.data());
      AttentionInput win(win_q.to_matrix(), win_k.to_matrix(), win_v.to_matrix());
      const Clock::time_point t0 = Clock::now();
      switch (v) {
        case Variant::Att: {
          volatile double sink = sda_exact(win)(0, 0);
          (void)sink;
          break;
        }
        case Variant::Ny: {
          const Matrix ql = segment_means(win.q, m), kl = segment_means(win.k, m);
          volatile double sink = sda_nystrom(win, ql, kl, cfg.pinv_iters)(0, 0);
          (void)sink;
          break;
        }
        default: {
          volatile double sink =
              sda_nystrom_fixed(win, batch_q_land, batch_k_land, batch_gamma_pinv)(0, 0);
          (void)sink;
          break;
        }
      }
      ns = elapsed_ns(t0, Clock::now());
    }
    if (!measured) continue;
    StreamReport r;
    r.step = i - n + 1;
    r.rel_error = 0.0;
    r.flops_analytic = variant_is_scheduled(v)
                           ? (updated ? cost.flops() : cost.flops_nonupdated())
                           : cost.flops();
    r.wall_ns = ns;
    r.landmark_updated = updated;
    reports.push_back(r);
  }

  std::vector<double> wall, flops;
  wall.reserve(reports.size());
  flops.reserve(reports.size());
  for (const StreamReport& r : reports) {
    wall.push_back(static_cast<double>(r.wall_ns));
    flops.push_back(static_cast<double>(r.flops_analytic));
  }
  BenchSummary s;
  s.n = n;
  s.steps = cfg.steps;
  s.mean_wall_ns = mean_of(wall);
  s.p50_wall_ns = percentile_of(wall, 0.50);
  s.p95_wall_ns = percentile_of(wall, 0.95);
  s.mean_flops = mean_of(flops);
  if (per_step) *per_step = std::move(reports);
  return s;
}

int run_bench(const RunConfig& cfg, const std::string& n_spec) {
  const std::optional<Variant> vopt = parse_variant(cfg.variant);
  if (!vopt) return usage_error("unknown variant '" + cfg.variant + "'");
  const Variant v = *vopt;
  std::vector<std::size_t> n_list;
  {
    std::stringstream ss(n_spec);
    std::string field;
    while (std::getline(ss, field, ',')) {
      char* end = nullptr;
      const unsigned long long parsed = std::strtoull(field.c_str(), &end, 10);
      if (field.empty() || (end && *end != '\0') || parsed == 0)
        return usage_error("--n expects a positive integer or comma list, got '" + field + "'");
      n_list.push_back(static_cast<std::size_t>(parsed));
    }
  }
  if (n_list.empty()) return usage_error("--n expects at least one value");
  RunConfig checked = cfg;
  checked.n = n_list.front();
  if (const int rc = validate_stream_config(checked, v)) return rc;
  for (std::size_t n : n_list)
    if (variant_uses_landmarks(v) && cfg.m > n)
      return usage_error("--m must not exceed every swept --n");

  if (n_list.size() == 1) {
    std::vector<StreamReport> per_step;
    const BenchSummary s = bench_cell(cfg, v, n_list.front(), &per_step);
    if (cfg.output_path.empty())
      write_report_csv(std::cout, per_step);
    else
      write_report_csv(cfg.output_path, per_step);
    std::ostream& summary = cfg.output_path.empty() ? std::cerr : std::cout;
    summary << "variant=" << variant_name(v) << " n=" << s.n << " steps=" << s.steps
            << " mean_wall_ns=" << format_double(s.mean_wall_ns)
            << " p50_wall_ns=" << format_double(s.p50_wall_ns)
            << " p95_wall_ns=" << format_double(s.p95_wall_ns)
            << " mean_flops_analytic=" << format_double(s.mean_flops) << "\n";
    return 0;
  }

  std::ostringstream csv;
  csv << "n,steps,mean_wall_ns,p50_wall_ns,p95_wall_ns,mean_flops_analytic\n";
  for (std::size_t n : n_list) {
    const BenchSummary s = bench_cell(cfg, v, n, nullptr);
    csv << s.n << "," << s.steps << "," << format_double(s.mean_wall_ns) << ","
        << format_double(s.p50_wall_ns) << "," << format_double(s.p95_wall_ns) << ","
        << format_double(s.mean_flops) << "\n";
  }
  if (cfg.output_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(cfg.output_path, std::ios::binary);
    if (!out) return usage_error("cannot open " + cfg.output_path);
    out << csv.str();
  }
  return 0;
}

int run_cost(const std::string& variant_spec, std::size_t n, std::size_t d, std::size_t m,
             std::size_t layers, const std::string& out_path) {
  if (n == 0 || d == 0) return usage_error("--n and --d must be >= 1");
  if (layers == 0) return usage_error("--layers must be >= 1");
  std::vector<Variant> list;
  if (variant_spec == "all") {
    list = {Variant::Att,        Variant::Ny,         Variant::NyFix,
            Variant::CoRe,       Variant::CoSi,       Variant::CoNyReCont,
            Variant::CoNySiCont, Variant::CoNyReFix,  Variant::CoNySiFix};
  } else {
    const std::optional<Variant> vopt = parse_variant(variant_spec);
    if (!vopt) return usage_error("unknown variant '" + variant_spec + "'");
    list = {*vopt};
  }
  bool needs_m = false;
  for (Variant v : list) needs_m = needs_m || variant_uses_landmarks(v);
  if (needs_m && (m == 0 || m > n))
    return usage_error("--m with 1 <= m <= n is required for landmark variants");

  const VariantCost att(Variant::Att, n, d, 0);
  const double att_layered = att.flops_layered(layers);

  std::printf("%-12s %14s %14s %16s %16s %12s %12s %10s\n", "variant", "flops",
              "flops_nonupd", "flops_amortized", "flops_layered", "mem_valley", "mem_peak",
              "rel_vs_att");
  std::ostringstream csv;
  csv << "variant,n,d,m,layers,flops,flops_nonupdated,flops_amortized,flops_layered,"
         "mem_valley,mem_peak,rel_vs_att\n";
  for (Variant v : list) {
    const std::size_t vm = variant_uses_landmarks(v) ? m : 0;
    const VariantCost c(v, n, d, vm);
    const MemoryCost mem = c.memory();
    const double layered = c.flops_layered(layers);
    const double rel = att_layered / layered;
    const bool sched = variant_is_scheduled(v);
    const std::string amort = sched ? format_double(c.flops_amortized()) : std::string("-");
    std::printf("%-12s %14llu %14llu %16s %16s %12llu %12llu %9.2fx\n", variant_name(v),
                static_cast<unsigned long long>(c.flops()),
                static_cast<unsigned long long>(c.flops_nonupdated()), amort.c_str(),
                format_double(layered).c_str(), static_cast<unsigned long long>(mem.valley),
                static_cast<unsigned long long>(mem.peak), rel);
    csv << variant_name(v) << "," << n << "," << d << "," << vm << "," << layers << ","
        << c.flops() << "," << c.flops_nonupdated() << "," << (sched ? amort : std::string())
        << "," << format_double(layered) << "," << mem.valley << "," << mem.peak << ","
        << format_double(rel) << "\n";
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) return usage_error("cannot open " + out_path);
    out << csv.str();
  }
  return 0;
}

int run_landmarks(const std::string& in_path, std::size_t m, std::uint64_t seed,
                  std::size_t cap, const std::string& out_path) {
  if (m == 0) return usage_error("--m must be >= 1");
  if (cap == 0) return usage_error("--cap must be >= 1");
  Matrix tokens(1, 1);
  try {
    tokens = read_matrix_csv(in_path);
  } catch (const std::invalid_argument& e) {
    return usage_error(e.what());
  }
  if (m > tokens.rows())
    return usage_error("--m exceeds the token count (" + std::to_string(tokens.rows()) + ")");
  if (m > cap) return usage_error("--m exceeds --cap; the subsample would be too small");
  const Matrix sample = subsample_tokens(tokens, cap, seed);
  const Matrix centers = kmeans_landmarks(sample, m, seed);
  if (out_path.empty())
    write_matrix_csv(std::cout, centers);
  else
    write_matrix_csv(out_path, centers);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "conystrom: continual attention verification and benchmark harness.\n"
      "Streams are seeded and deterministic (entries within [-1, 1]); inputs\n"
      "to the kernels must stay pre-scaled because kernel entries are raw\n"
      "exponentials. Flags mirror environment variables prefixed CONYSTROM_."};
  app.require_subcommand(1);

  RunConfig cfg;
  VerifyOptions vopt;
  std::string bench_n = "16";
  std::string cost_variant = "all";
  std::size_t layers = 1;
  std::string landmarks_in;
  std::size_t cap = 50000;

  CLI::App* verify = app.add_subcommand("verify", "Step a continual variant against its from-scratch reference");
  verify->add_option("--variant", cfg.variant, "Att variant name (continual only)")
      ->envname("CONYSTROM_VARIANT");
  verify->add_option("--n", cfg.n, "window length")->envname("CONYSTROM_N");
  verify->add_option("--d", cfg.d, "embedding width")->envname("CONYSTROM_D");
  verify->add_option("--m", cfg.m, "landmark count")->envname("CONYSTROM_M");
  verify->add_option("--steps", cfg.steps, "measured steps")->envname("CONYSTROM_STEPS");
  verify->add_option("--seed", cfg.seed, "stream seed")->envname("CONYSTROM_SEED");
  verify->add_option("--tol", cfg.tolerance, "max per-step relative error")
      ->envname("CONYSTROM_TOL");
  verify->add_option("--pinv-iters", cfg.pinv_iters, "pseudo-inverse iterations")
      ->envname("CONYSTROM_PINV_ITERS");
  verify->add_option("--refresh-interval", cfg.refresh_interval,
                     "cache refresh period in steps (0 = 10n)")
      ->envname("CONYSTROM_REFRESH_INTERVAL");
  verify->add_option("--out", cfg.output_path, "report CSV path (default stdout)")
      ->envname("CONYSTROM_OUT");
  verify->add_option("--save-state", vopt.save_state_path, "snapshot path written after the run");
  verify->add_option("--load-state", vopt.load_state_path, "snapshot path to resume from");
  verify->add_option("--q-landmarks", vopt.q_landmarks_path,
                     "fixed query landmarks CSV (default: k-means of the warm window)");
  verify->add_option("--k-landmarks", vopt.k_landmarks_path,
                     "fixed key landmarks CSV (default: k-means of the warm window)");

  CLI::App* bench = app.add_subcommand("bench", "Measure steady-state per-step wall-clock");
  bench->add_option("--variant", cfg.variant, "variant name")->envname("CONYSTROM_VARIANT");
  bench->add_option("--n", bench_n, "window length, or comma list for a sweep")
      ->envname("CONYSTROM_N");
  bench->add_option("--d", cfg.d, "embedding width")->envname("CONYSTROM_D");
  bench->add_option("--m", cfg.m, "landmark count")->envname("CONYSTROM_M");
  bench->add_option("--steps", cfg.steps, "measured steps after n warm-up steps")
      ->envname("CONYSTROM_STEPS");
  bench->add_option("--seed", cfg.seed, "stream seed")->envname("CONYSTROM_SEED");
  bench->add_option("--pinv-iters", cfg.pinv_iters, "pseudo-inverse iterations")
      ->envname("CONYSTROM_PINV_ITERS");
  bench->add_option("--refresh-interval", cfg.refresh_interval,
                    "cache refresh period in steps (0 = 10n)")
      ->envname("CONYSTROM_REFRESH_INTERVAL");
  bench->add_option("--out", cfg.output_path, "CSV path (default stdout)")
      ->envname("CONYSTROM_OUT");

  CLI::App* cost = app.add_subcommand("cost", "Evaluate the closed-form FLOP/memory models");
  cost->add_option("--variant", cost_variant, "variant name or 'all'")
      ->envname("CONYSTROM_VARIANT");
  cost->add_option("--n", cfg.n, "window length")->envname("CONYSTROM_N");
  cost->add_option("--d", cfg.d, "embedding width")->envname("CONYSTROM_D");
  cost->add_option("--m", cfg.m, "landmark count")->envname("CONYSTROM_M");
  cost->add_option("--layers", layers, "stacked layers")->envname("CONYSTROM_LAYERS");
  cost->add_option("--out", cfg.output_path, "optional CSV path")->envname("CONYSTROM_OUT");

  CLI::App* landmarks = app.add_subcommand("landmarks", "Cluster a token CSV into landmarks");
  landmarks->add_option("--in", landmarks_in, "token matrix CSV")
      ->envname("CONYSTROM_IN")
      ->required();
  landmarks->add_option("--m", cfg.m, "landmark count")->envname("CONYSTROM_M")->required();
  landmarks->add_option("--seed", cfg.seed, "clustering seed")->envname("CONYSTROM_SEED");
  landmarks->add_option("--cap", cap, "subsample size bound")->envname("CONYSTROM_CAP");
  landmarks->add_option("--out", cfg.output_path, "landmark CSV path (default stdout)")
      ->envname("CONYSTROM_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (verify->parsed()) return run_verify(cfg, vopt);
    if (bench->parsed()) return run_bench(cfg, bench_n);
    if (cost->parsed()) return run_cost(cost_variant, cfg.n, cfg.d, cfg.m, layers,
                                        cfg.output_path);
    if (landmarks->parsed())
      return run_landmarks(landmarks_in, cfg.m, cfg.seed, cap, cfg.output_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
