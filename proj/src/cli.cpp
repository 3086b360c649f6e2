#include "lot/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lot/grad.hpp"
#include "lot/io.hpp"
#include "lot/layers.hpp"
#include "lot/network.hpp"
#include "lot/parallel.hpp"
#include "lot/verify.hpp"

namespace lot::cli {

namespace {

using io::format_double;

class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Padding parse_padding(const std::string& s) {
  if (s == "zero") return Padding::zero;
  if (s == "circular") return Padding::circular;
  throw InvalidArgument("unknown padding '" + s + "' (expected zero or circular)");
}

// "0.1,72/255,108/255"
std::vector<double> parse_radii(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto slash = item.find('/');
      if (slash == std::string::npos) {
        out.push_back(std::stod(item));
      } else {
        out.push_back(std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1)));
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("cannot parse radius '" + item + "'");
    }
  }
  return out;
}

ConvKernel load_kernel(const std::string& path) {
  const io::DecodedTensor d = io::read_tensor(path);
  if (d.tensor.rank() != 4 || d.tensor.dim(2) != d.tensor.dim(3))
    throw ShapeError(path + ": kernel must be c_out x c_in x k x k");
  return ConvKernel::from_tensor(d.tensor);
}

/// Writes to `path`, or to `fallback` when path is empty.
void emit(const io::Report& report, const std::string& path, std::ostream& fallback) {
  if (path.empty()) {
    report.write(fallback);
    return;
  }
  const std::string text = report.str();
  io::write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

// ---------------------------------------------------------------------------

struct OrthogonalizeArgs {
  std::string kernel, out, report, spatial, precision = "f32", padding = "zero";
  std::size_t input_side = 0;
  int steps = kDefaultNewtonSteps;
  double tol = 1e-6;
};

int cmd_orthogonalize(const OrthogonalizeArgs& a, std::ostream& out) {
  const ConvKernel v = load_kernel(a.kernel);
  const io::DType dtype = a.precision == "f64" ? io::DType::f64 : io::DType::f32;
  if (a.precision != "f32" && a.precision != "f64") throw InvalidArgument("precision must be f32 or f64");
  const LotLayer layer(v, a.input_side, parse_padding(a.padding), std::nullopt,
                       NewtonOptions{a.steps, kDefaultEarlyStopTol});
  const FrequencyKernel w = layer.orthogonalized_kernel();
  const verify::OrthogonalityReport rep = verify::orthogonality_report(w, a.tol);

  if (!a.out.empty()) io::write_tensor(a.out, io::frequency_kernel_tensor(w), dtype);
  if (!a.spatial.empty()) io::write_tensor(a.spatial, extract_spatial_kernel(w), dtype);

  io::Report r({"row", "col", "residual"});
  for (std::size_t p = 0; p < w.pixel_count(); ++p)
    r.add_row({std::to_string(p / w.side()), std::to_string(p % w.side()), format_double(rep.residuals[p])});
  r.add_summary("pixels", std::to_string(w.pixel_count()));
  r.add_summary("max_residual", format_double(rep.max_residual));
  r.add_summary("mean_residual", format_double(rep.mean_residual));
  r.add_summary("max_sigma", format_double(rep.max_sigma));
  r.add_summary("min_sigma", format_double(rep.min_sigma));
  r.add_summary("tolerance", format_double(a.tol));
  r.add_summary("passed", yes_no(rep.passed));
  emit(r, a.report, out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct CertifyArgs {
  std::string model, data, labels, radii = "36/255,72/255,108/255", out;
};

int cmd_certify(const CertifyArgs& a, std::ostream& out) {
  Network net = io::load_model(a.model);
  const Tensor data = io::read_tensor(a.data).tensor;
  const std::vector<double> radii = parse_radii(a.radii);
  const auto& in = net.input_shape();
  if (data.rank() != 4 || data.dim(1) != in[0] || data.dim(2) != in[1] || data.dim(3) != in[2])
    throw ShapeError("data must be n x " + std::to_string(in[0]) + " x " + std::to_string(in[1]) + " x " +
                     std::to_string(in[2]));
  const std::size_t n = data.dim(0);
  std::vector<std::size_t> labels;
  if (!a.labels.empty()) {
    labels = io::read_labels(a.labels);
    if (labels.size() != n)
      throw ShapeError("labels: " + std::to_string(labels.size()) + " entries for " + std::to_string(n) + " inputs");
    for (auto l : labels)
      if (l >= net.classes()) throw ShapeError("labels: class " + std::to_string(l) + " out of range");
  }

  net.precompute();
  const LipschitzReport lip = lipschitz_bound(net);
  const std::size_t per = n ? data.size() / n : 0;
  std::vector<CertificationResult> results(n);
  parallel_for(n, [&](std::size_t i) {
    Tensor x(in, std::vector<double>(data.values().begin() + i * per, data.values().begin() + (i + 1) * per));
    std::optional<std::size_t> label;
    if (!labels.empty()) label = labels[i];
    results[i] = certify(net, lip, x, label, radii);
  });

  std::vector<std::string> cols = {"index", "label", "predicted", "correct", "margin", "radius"};
  for (double r : radii) cols.push_back("certified@" + format_double(r));
  io::Report rep(cols);
  std::size_t correct = 0;
  std::vector<std::size_t> certified(radii.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = results[i];
    std::vector<std::string> row = {std::to_string(i), c.label ? std::to_string(*c.label) : "-",
                                    std::to_string(c.predicted), yes_no(c.correct), format_double(c.margin),
                                    format_double(c.radius)};
    for (std::size_t j = 0; j < radii.size(); ++j) {
      row.push_back(yes_no(c.certified[j]));
      certified[j] += c.certified[j] ? 1 : 0;
    }
    correct += c.correct ? 1 : 0;
    rep.add_row(std::move(row));
  }
  auto ratio = [n](std::size_t k) { return n ? format_double(static_cast<double>(k) / static_cast<double>(n)) : "0"; };
  rep.add_summary("n", std::to_string(n));
  rep.add_summary("lipschitz_backbone", format_double(lip.backbone));
  rep.add_summary("lipschitz_head", format_double(lip.head));
  rep.add_summary("lipschitz_total", format_double(lip.total));
  rep.add_summary("vanilla_accuracy", labels.empty() ? "na" : ratio(correct));
  for (std::size_t j = 0; j < radii.size(); ++j)
    rep.add_summary("certified_accuracy@" + format_double(radii[j]), ratio(certified[j]));
  emit(rep, a.out, out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string kernel, out, padding = "zero";
  std::size_t input_side = 0;
  int steps = kDefaultNewtonSteps;
  bool trace = false, padding_ab = false;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const ConvKernel v = load_kernel(a.kernel);
  const Padding padding = parse_padding(a.padding);
  const LotLayer layer(v, a.input_side, padding, std::nullopt, NewtonOptions{a.steps, kDefaultEarlyStopTol});
  const FrequencyKernel w = layer.orthogonalized_kernel();
  const verify::OrthogonalityReport orth = verify::orthogonality_report(w, a.tol);
  const double imag = spatial_imag_residual(w);

  io::Report rep({"step", "min_sigma", "max_sigma", "max_residual"});
  bool ok = orth.passed && imag < 1e-8;
  rep.add_summary("max_residual", format_double(orth.max_residual));
  rep.add_summary("mean_residual", format_double(orth.mean_residual));
  rep.add_summary("max_sigma", format_double(orth.max_sigma));
  rep.add_summary("min_sigma", format_double(orth.min_sigma));
  rep.add_summary("orthogonality_passed", yes_no(orth.passed));
  rep.add_summary("max_spatial_imag", format_double(imag));

  if (a.trace) {
    const verify::ConvergenceTrace tr = verify::convergence_trace(v, a.input_side, a.steps, padding);
    bool bounded = true;
    for (const auto& s : tr.steps) {
      rep.add_row({std::to_string(s.step), format_double(s.min_sigma), format_double(s.max_sigma),
                   format_double(s.max_residual)});
      bounded = bounded && s.max_sigma <= 1.0 + 1e-6;
    }
    rep.add_summary("trace_sigma_bounded", yes_no(bounded));
    ok = ok && bounded;
    if (tr.steps.size() > 8) {
      const bool tight = tr.steps[8].min_sigma >= 0.9999;
      rep.add_summary("trace_min_sigma_step8", format_double(tr.steps[8].min_sigma));
      rep.add_summary("trace_step8_passed", yes_no(tight));
      ok = ok && tight;
    }
  }

  if (a.padding_ab) {
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor x({v.c_in(), a.input_side, a.input_side});
    for (auto& e : x.values()) e = normal(rng);
    const verify::PaddingAbReport ab = verify::padding_ab(v, x, 16, a.seed + 1, a.steps);
    rep.add_summary("padding_difference_norm", format_double(ab.difference_norm));
    rep.add_summary("padding_relative_difference", format_double(ab.relative_difference));
    rep.add_summary("zero_norm_ratio", format_double(ab.zero_norm_ratio));
    rep.add_summary("circular_norm_ratio", format_double(ab.circular_norm_ratio));
    rep.add_summary("zero_lip_sample", format_double(ab.zero_lip_sample));
    rep.add_summary("circular_lip_sample", format_double(ab.circular_lip_sample));
    const bool lip_ok = ab.zero_lip_sample <= 1.0 + 1e-6 && ab.circular_lip_sample <= 1.0 + 1e-6;
    rep.add_summary("padding_ab_passed", yes_no(lip_ok));
    ok = ok && lip_ok;
  }
  rep.add_summary("passed", yes_no(ok));
  emit(rep, a.out, out);
  if (!ok) throw CheckFailed("verify: one or more checks failed");
  return kOk;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t cases = 20;
  int steps = kDefaultNewtonSteps;
  double tol = 1e-4;
  std::string out;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  const grad::GradcheckReport g = grad::gradcheck_lot_layer(a.seed, a.cases, a.steps);
  io::Report rep({"case", "c_out", "c_in", "k", "w", "padding", "residual", "rel_error_v", "rel_error_x"});
  for (std::size_t i = 0; i < g.cases.size(); ++i) {
    const auto& c = g.cases[i];
    rep.add_row({std::to_string(i), std::to_string(c.c_out), std::to_string(c.c_in), std::to_string(c.k),
                 std::to_string(c.w), c.padding == Padding::zero ? "zero" : "circular", yes_no(c.residual),
                 format_double(c.rel_error_v), format_double(c.rel_error_x)});
  }
  rep.add_summary("cases", std::to_string(g.cases.size()));
  rep.add_summary("max_rel_error", format_double(g.max_rel_error));
  rep.add_summary("tolerance", format_double(a.tol));
  rep.add_summary("passed", yes_no(g.passed(a.tol)));
  emit(rep, a.out, out);
  if (!g.passed(a.tol)) throw CheckFailed("gradcheck: relative error above tolerance");
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  grad::TrainConfig config;
  double tol = 1e-6;
  std::string out, model;
};

int cmd_train_toy(const TrainArgs& a, std::ostream& out) {
  const grad::TrainingReport t = grad::train_toy(a.config);
  io::Report rep({"epoch", "loss", "accuracy", "max_orthogonality_residual", "max_sigma"});
  bool invariants = !t.diverged;
  for (const auto& e : t.epochs) {
    rep.add_row({std::to_string(e.epoch), format_double(e.loss), format_double(e.accuracy),
                 format_double(e.max_orthogonality_residual), format_double(e.max_sigma)});
    invariants = invariants && e.max_orthogonality_residual <= a.tol && e.max_sigma <= 1.0 + a.tol;
  }
  rep.add_summary("steps", std::to_string(t.steps));
  rep.add_summary("diverged", yes_no(t.diverged));
  if (!t.message.empty()) rep.add_summary("message", t.message);
  rep.add_summary("final_accuracy", format_double(t.final_accuracy()));
  rep.add_summary("invariants_held", yes_no(invariants));
  emit(rep, a.out, out);
  if (!a.model.empty()) io::save_model(a.model, t.network);
  if (!invariants) throw CheckFailed("train-toy: orthogonality invariants violated");
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::size_t channels = 16, side = 32, reps = 5;
  int steps = kDefaultNewtonSteps;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.reps == 0) throw InvalidArgument("bench: reps must be positive");
  const ConvKernel v = ConvKernel::gaussian(a.channels, a.channels, 3, 0.05, a.seed);
  LotLayer uncached(v, a.side, Padding::zero, std::nullopt, NewtonOptions{a.steps, kDefaultEarlyStopTol});
  LotLayer cached = precompute_cache(uncached);
  std::mt19937_64 rng(a.seed + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor x({a.channels, a.side, a.side});
  for (auto& e : x.values()) e = normal(rng);

  auto time = [&](const LotLayer& layer) {
    double sink = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < a.reps; ++r) sink += layer.forward(x)[0];
    const auto t1 = std::chrono::steady_clock::now();
    if (!std::isfinite(sink)) throw NumericalBreakdown("bench: non-finite output");
    return std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(a.reps);
  };
  const double t_cached = time(cached);
  const double t_uncached = time(uncached);

  io::Report rep({"mode", "seconds_per_forward"});
  rep.add_row({"cached", format_double(t_cached)});
  rep.add_row({"uncached", format_double(t_uncached)});
  rep.add_summary("channels", std::to_string(a.channels));
  rep.add_summary("side", std::to_string(a.side));
  rep.add_summary("reps", std::to_string(a.reps));
  rep.add_summary("speedup", format_double(t_uncached / t_cached));
  emit(rep, a.out, out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct InitKernelArgs {
  std::size_t c_out = 1, c_in = 1, k = 3;
  std::string init = "identity", out;
  double stddev = 0.05;
  std::uint64_t seed = 0;
};

int cmd_init_kernel(const InitKernelArgs& a, std::ostream&) {
  ConvKernel v;
  if (a.init == "identity") {
    v = ConvKernel::identity(a.c_out, a.c_in, a.k);
  } else if (a.init == "gaussian") {
    v = ConvKernel::gaussian(a.c_out, a.c_in, a.k, a.stddev, a.seed);
  } else if (a.init == "zero") {
    v = ConvKernel(a.c_out, a.c_in, a.k);
  } else {
    throw InvalidArgument("init must be identity, gaussian or zero");
  }
  io::write_tensor(a.out, v.to_tensor(), io::DType::f64);
  return kOk;
}

struct InitModelArgs {
  LipConvNetConfig config;
  std::string padding = "zero", head = "lln", init = "identity-mixed", out;
};

int cmd_init_model(InitModelArgs a, std::ostream&) {
  a.config.padding = parse_padding(a.padding);
  if (a.head != "lln" && a.head != "plain") throw InvalidArgument("head must be lln or plain");
  a.config.head = a.head == "lln" ? HeadType::lln : HeadType::plain;
  if (a.init != "identity-mixed" && a.init != "gaussian") throw InvalidArgument("init must be identity-mixed or gaussian");
  a.config.init = a.init == "identity-mixed" ? InitScheme::identity_mixed : InitScheme::gaussian;
  io::save_model(a.out, make_lipconvnet(a.config));
  return kOk;
}

struct MakeDataArgs {
  std::size_t samples = 64;
  std::uint64_t seed = 0;
  std::string data, labels;
};

int cmd_make_data(const MakeDataArgs& a, std::ostream&) {
  const grad::Dataset d = grad::synthetic_quadrant_task(a.samples, a.seed);
  io::write_tensor(a.data, d.inputs, io::DType::f64);
  io::write_labels(a.labels, d.labels);
  return kOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Format: return kIo;
    case ErrorKind::DegenerateKernel: return kDegenerate;
    case ErrorKind::Divergence:
    case ErrorKind::NumericalBreakdown: return kDivergence;
    case ErrorKind::Shape: return kShape;
    case ErrorKind::RealityViolation: return kCheckFailed;
    case ErrorKind::NonConvergence:
    case ErrorKind::StaleCache:
    case ErrorKind::CannotCertify: return kNumerical;
    case ErrorKind::InvalidArgument: return kUsage;
  }
  return kNumerical;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Orthogonal convolution layers: orthogonalize, verify, certify, train"};
  app.require_subcommand(1);
  std::function<int()> action;

  OrthogonalizeArgs orth;
  auto* c_orth = app.add_subcommand("orthogonalize", "Orthogonalize a kernel and write its frequency kernel");
  c_orth->add_option("--kernel", orth.kernel, "Kernel tensor file (c_out x c_in x k x k)")->required();
  c_orth->add_option("--input-side", orth.input_side, "Input side w")->required();
  c_orth->add_option("--steps", orth.steps, "Newton steps");
  c_orth->add_option("--out", orth.out, "Frequency kernel output [s, s, c_out, c_in, 2]");
  c_orth->add_option("--precision", orth.precision, "Stored precision: f32 or f64");
  c_orth->add_option("--padding", orth.padding, "zero or circular");
  c_orth->add_option("--emit-spatial", orth.spatial, "Also write the spatial kernel [c_out, c_in, s, s]");
  c_orth->add_option("--report", orth.report, "Report path (default stdout)");
  c_orth->add_option("--tol", orth.tol, "Orthogonality tolerance for the report");
  c_orth->callback([&] { action = [&] { return cmd_orthogonalize(orth, out); }; });

  CertifyArgs cert;
  auto* c_cert = app.add_subcommand("certify", "Certified radii of a model on a dataset");
  c_cert->add_option("--model", cert.model, "Model manifest")->required();
  c_cert->add_option("--data", cert.data, "Input batch n x c x w x w")->required();
  c_cert->add_option("--labels", cert.labels, "Rank-1 u32 label file");
  c_cert->add_option("--radii", cert.radii, "Comma-separated radii, fractions allowed");
  c_cert->add_option("--out", cert.out, "Report path (default stdout)");
  c_cert->callback([&] { action = [&] { return cmd_certify(cert, out); }; });

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Check orthogonality, convergence and padding of a kernel");
  c_ver->add_option("--kernel", ver.kernel, "Kernel tensor file")->required();
  c_ver->add_option("--input-side", ver.input_side, "Input side w")->required();
  c_ver->add_option("--steps", ver.steps, "Newton steps");
  c_ver->add_option("--padding", ver.padding, "zero or circular");
  c_ver->add_flag("--trace", ver.trace, "Record the per-step sigma_max band");
  c_ver->add_flag("--padding-ab", ver.padding_ab, "Compare zero and circular padding");
  c_ver->add_option("--tol", ver.tol, "Orthogonality tolerance");
  c_ver->add_option("--seed", ver.seed, "Seed for sampled inputs");
  c_ver->add_option("--out", ver.out, "Report path (default stdout)");
  c_ver->callback([&] { action = [&] { return cmd_verify(ver, out); }; });

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite differences against reverse mode");
  c_gc->add_option("--seed", gc.seed, "Seed");
  c_gc->add_option("--cases", gc.cases, "Number of random layers");
  c_gc->add_option("--steps", gc.steps, "Newton steps");
  c_gc->add_option("--tol", gc.tol, "Relative error tolerance");
  c_gc->add_option("--out", gc.out, "Report path (default stdout)");
  c_gc->callback([&] { action = [&] { return cmd_gradcheck(gc, out); }; });

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train-toy", "Train the toy network on the synthetic task");
  c_tr->add_option("--seed", tr.config.seed, "Seed");
  c_tr->add_option("--epochs", tr.config.epochs, "Epochs");
  c_tr->add_option("--samples", tr.config.samples, "Training samples");
  c_tr->add_option("--batch", tr.config.batch, "Batch size");
  c_tr->add_option("--lr", tr.config.lr, "Learning rate");
  c_tr->add_option("--momentum", tr.config.momentum, "Momentum");
  c_tr->add_option("--gamma", tr.config.gamma, "CReg weight");
  c_tr->add_option("--steps", tr.config.newton_steps, "Newton steps");
  c_tr->add_option("--tol", tr.tol, "Orthogonality tolerance checked after every step");
  c_tr->add_option("--save-model", tr.model, "Write the trained model manifest here");
  c_tr->add_option("--out", tr.out, "Report path (default stdout)");
  c_tr->callback([&] { action = [&] { return cmd_train_toy(tr, out); }; });

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Cached versus orthogonalize-every-call forward time");
  c_bench->add_option("--channels", bench.channels, "Channels");
  c_bench->add_option("--side", bench.side, "Input side");
  c_bench->add_option("--reps", bench.reps, "Forwards per mode");
  c_bench->add_option("--steps", bench.steps, "Newton steps");
  c_bench->add_option("--seed", bench.seed, "Seed");
  c_bench->add_option("--out", bench.out, "Report path (default stdout)");
  c_bench->callback([&] { action = [&] { return cmd_bench(bench, out); }; });

  InitKernelArgs ik;
  auto* c_ik = app.add_subcommand("init-kernel", "Write an identity, Gaussian or zero kernel file");
  c_ik->add_option("--c-out", ik.c_out, "Output channels")->required();
  c_ik->add_option("--c-in", ik.c_in, "Input channels")->required();
  c_ik->add_option("--k", ik.k, "Kernel size");
  c_ik->add_option("--init", ik.init, "identity, gaussian or zero");
  c_ik->add_option("--std", ik.stddev, "Gaussian standard deviation");
  c_ik->add_option("--seed", ik.seed, "Seed");
  c_ik->add_option("--out", ik.out, "Output path")->required();
  c_ik->callback([&] { action = [&] { return cmd_init_kernel(ik, out); }; });

  InitModelArgs im;
  auto* c_im = app.add_subcommand("init-model", "Write a freshly initialised LipConvNet-style model");
  c_im->add_option("--channels", im.config.input_channels, "Input channels");
  c_im->add_option("--side", im.config.input_side, "Input side");
  c_im->add_option("--width", im.config.width, "Block width (even)");
  c_im->add_option("--blocks", im.config.blocks, "Blocks");
  c_im->add_option("--classes", im.config.classes, "Classes");
  c_im->add_option("--residual", im.config.residual, "Residual weight of square blocks");
  c_im->add_option("--padding", im.padding, "zero or circular");
  c_im->add_option("--head", im.head, "lln or plain");
  c_im->add_option("--init", im.init, "identity-mixed or gaussian");
  c_im->add_option("--seed", im.config.seed, "Seed");
  c_im->add_option("--out", im.out, "Manifest path")->required();
  c_im->callback([&] { action = [&] { return cmd_init_model(im, out); }; });

  MakeDataArgs md;
  auto* c_md = app.add_subcommand("make-data", "Write the synthetic quadrant dataset");
  c_md->add_option("--samples", md.samples, "Samples");
  c_md->add_option("--seed", md.seed, "Seed");
  c_md->add_option("--data", md.data, "Input batch path")->required();
  c_md->add_option("--labels", md.labels, "Label file path")->required();
  c_md->callback([&] { action = [&] { return cmd_make_data(md, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error\tUsage\t" << e.what() << '\n';
    return kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const CheckFailed& e) {
    err << "error\tCheckFailed\t" << e.what() << '\n';
    return kCheckFailed;
  } catch (const Error& e) {
    err << "error\t" << to_string(e.kind()) << '\t' << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error\tIo\t" << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error\tInternal\t" << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace lot::cli
