#include "sepnet/nets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace sepnet {

using json = nlohmann::json;

// ===== mlp basics ===========================================================

int64_t mlp_input_dim(const MlpParams& p) {
  if (p.layers.empty()) throw ArgumentError("mlp_input_dim: empty network");
  return p.layers.front().W.dim(1);
}

int64_t mlp_output_dim(const MlpParams& p) {
  if (p.layers.empty()) throw ArgumentError("mlp_output_dim: empty network");
  return p.layers.back().W.dim(0);
}

void check_mlp_shapes(const MlpParams& p) {
  if (p.layers.empty()) throw ArgumentError("check_mlp_shapes: empty network");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const DenseLayer& layer = p.layers[l];
    if (layer.W.rank() != 2 || layer.b.rank() != 1 || layer.b.dim(0) != layer.W.dim(0)) {
      throw ContractError("layer " + std::to_string(l) + ": W " + shape_str(layer.W.shape()) +
                          " and b " + shape_str(layer.b.shape()) + " are inconsistent");
    }
    if (l > 0 && layer.W.dim(1) != p.layers[l - 1].W.dim(0)) {
      throw ContractError("layer " + std::to_string(l) + " input width " +
                          std::to_string(layer.W.dim(1)) + " does not match previous output " +
                          std::to_string(p.layers[l - 1].W.dim(0)));
    }
  }
}

// ===== field accessors ======================================================

namespace {

void check_axis(int axis, int dim, const char* what) {
  if (axis < 0 || axis >= dim) {
    throw ArgumentError(std::string(what) + ": axis " + std::to_string(axis) +
                        " out of range for a " + std::to_string(dim) + "-d field");
  }
}

}  // namespace

const ad::Var& FieldWithDerivs::first(int axis) const {
  check_axis(axis, dim, "FieldWithDerivs::first");
  const auto& slot = d1[static_cast<std::size_t>(axis)];
  if (!slot) {
    throw ContractError("first derivative along axis " + std::to_string(axis) +
                        " was not requested from the forward pass");
  }
  return *slot;
}

const ad::Var& FieldWithDerivs::second(int axis) const {
  check_axis(axis, dim, "FieldWithDerivs::second");
  const auto& slot = d2[static_cast<std::size_t>(axis)];
  if (!slot) {
    throw ContractError("second derivative along axis " + std::to_string(axis) +
                        " was not requested from the forward pass");
  }
  return *slot;
}

// ===== forward passes =======================================================

namespace {

real act_eval(Activation act, real x) {
  switch (act) {
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Sine:
      return std::sin(x);
  }
  throw UnsupportedError("unknown activation");
}

// Rank-1 [N] -> column [N x 1].
Tensor as_column(const Tensor& axis) {
  if (axis.rank() != 1) {
    throw DimensionError("expected a rank-1 axis, got " + shape_str(axis.shape()));
  }
  Tensor col({axis.numel(), 1});
  for (int64_t i = 0; i < axis.numel(); ++i) col[i] = axis[i];
  return col;
}

void check_sensors(const Tensor& u_sensors, int64_t m) {
  if (u_sensors.rank() != 2 || u_sensors.dim(1) != m) {
    throw DimensionError("sensor batch must be [F x " + std::to_string(m) + "], got " +
                         shape_str(u_sensors.shape()));
  }
}

// Distinct derivative orders wanted per axis.
struct AxisNeeds {
  bool d1 = false;
  bool d2 = false;
  bool any() const { return d1 || d2; }
};

std::vector<AxisNeeds> collect_needs(const std::vector<DerivReq>& needed, int dim) {
  std::vector<AxisNeeds> by_axis(static_cast<std::size_t>(dim));
  for (const DerivReq& req : needed) {
    check_axis(req.axis, dim, "derivative request");
    if (req.order == 1) {
      by_axis[static_cast<std::size_t>(req.axis)].d1 = true;
    } else if (req.order == 2) {
      by_axis[static_cast<std::size_t>(req.axis)].d2 = true;
    } else {
      throw ArgumentError("derivative order must be 1 or 2, got " + std::to_string(req.order));
    }
  }
  return by_axis;
}

}  // namespace

Tensor mlp_forward(const MlpParams& p, const Tensor& x) {
  check_mlp_shapes(p);
  if (x.rank() != 2 || x.dim(1) != mlp_input_dim(p)) {
    throw DimensionError("mlp_forward: input must be [N x " + std::to_string(mlp_input_dim(p)) +
                         "], got " + shape_str(x.shape()));
  }
  Tensor h = x;
  const std::size_t L = p.layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    const DenseLayer& layer = p.layers[l];
    Tensor y = matmul_nt(h, layer.W);
    for (int64_t i = 0; i < y.dim(0); ++i) {
      for (int64_t j = 0; j < y.dim(1); ++j) y.at(i, j) += layer.b[j];
    }
    if (l + 1 < L) {
      for (int64_t i = 0; i < y.numel(); ++i) y[i] = act_eval(p.act, y[i]);
    }
    h = std::move(y);
  }
  return h;
}

ad::Var mlp_forward(ad::Tape& tape, const ad::MlpVars& p, ad::Var x) {
  if (p.layers.empty()) throw ArgumentError("mlp_forward: empty network");
  ad::Var h = x;
  const std::size_t L = p.layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    h = tape.linear(h, p.layers[l].first, p.layers[l].second);
    if (l + 1 < L) h = tape.activation(h, p.act);
  }
  return h;
}

SepOnetVars lift(ad::Tape& tape, const SepOnetModel& m) {
  SepOnetVars v;
  v.branch = ad::lift(tape, m.branch);
  v.trunks.reserve(m.trunks.size());
  for (const MlpParams& t : m.trunks) v.trunks.push_back(ad::lift(tape, t));
  return v;
}

DeepOnetVars lift(ad::Tape& tape, const DeepOnetModel& m) {
  return DeepOnetVars{ad::lift(tape, m.branch), ad::lift(tape, m.trunk)};
}

Tensor seponet_forward(const SepOnetModel& m, const Tensor& u_sensors,
                       const std::vector<Tensor>& axes) {
  check_sensors(u_sensors, m.m);
  if (static_cast<int64_t>(axes.size()) != m.d) {
    throw DimensionError("expected " + std::to_string(m.d) + " coordinate axes, got " +
                         std::to_string(axes.size()));
  }
  Tensor coeffs = mlp_forward(m.branch, u_sensors);  // [F x r]
  std::vector<Tensor> factors;
  factors.reserve(axes.size());
  std::vector<int64_t> out_shape{u_sensors.dim(0)};
  int64_t cell = 1;
  for (std::size_t n = 0; n < axes.size(); ++n) {
    factors.push_back(mlp_forward(m.trunks[n], as_column(axes[n])));  // [N_n x r]
    out_shape.push_back(axes[n].numel());
    cell *= axes[n].numel();
  }
  // Same contraction the tape op performs: mode stack, then coeffs x stack.
  Tensor stack({m.r, cell});
  std::vector<Tensor> cols(axes.size());
  for (int64_t k = 0; k < m.r; ++k) {
    for (std::size_t n = 0; n < axes.size(); ++n) {
      Tensor col({factors[n].dim(0)});
      for (int64_t i = 0; i < col.numel(); ++i) col[i] = factors[n].at(i, k);
      cols[n] = std::move(col);
    }
    Tensor mode = outer_product_chain(cols);
    std::memcpy(stack.data() + k * cell, mode.data(), static_cast<std::size_t>(cell) * sizeof(real));
  }
  Tensor flat = matmul(coeffs, stack);  // [F x cell]
  return Tensor(out_shape, std::vector<real>(flat.data(), flat.data() + flat.numel()));
}

ad::Var seponet_forward(ad::Tape& tape, const SepOnetVars& v, const Tensor& u_sensors,
                        const std::vector<Tensor>& axes) {
  ad::Var coeffs = mlp_forward(tape, v.branch, tape.constant(u_sensors));
  std::vector<ad::Var> factors;
  factors.reserve(axes.size());
  for (std::size_t n = 0; n < axes.size(); ++n) {
    factors.push_back(mlp_forward(tape, v.trunks[n], tape.constant(as_column(axes[n]))));
  }
  return tape.separable_grid(coeffs, factors);
}

FieldWithDerivs seponet_field_with_derivs(ad::Tape& tape, const SepOnetVars& v,
                                          const Tensor& u_sensors,
                                          const std::vector<Tensor>& axes,
                                          const std::vector<DerivReq>& needed) {
  const int d = static_cast<int>(axes.size());
  if (d < 1 || d > kMaxAxes) {
    throw ArgumentError("separable forward supports 1 to " + std::to_string(kMaxAxes) +
                        " axes, got " + std::to_string(d));
  }
  if (v.trunks.size() != axes.size()) {
    throw DimensionError("model has " + std::to_string(v.trunks.size()) + " trunks but " +
                         std::to_string(axes.size()) + " axes were given");
  }
  const auto by_axis = collect_needs(needed, d);

  ad::Var coeffs = mlp_forward(tape, v.branch, tape.constant(u_sensors));

  // Per-axis trunk outputs; a jet pass where derivatives are wanted.
  std::vector<ad::Var> vals(axes.size());
  std::vector<ad::Jet2> jets(axes.size());
  for (std::size_t n = 0; n < axes.size(); ++n) {
    ad::Var y = tape.constant(as_column(axes[n]));
    if (by_axis[n].any()) {
      jets[n] = ad::jet_through_mlp(tape, v.trunks[n], y);
      vals[n] = jets[n].v;
    } else {
      vals[n] = mlp_forward(tape, v.trunks[n], y);
    }
  }

  FieldWithDerivs out;
  out.dim = d;
  out.value = tape.separable_grid(coeffs, vals);
  // d/dy_a of a rank-r separable sum swaps in the differentiated factor on
  // axis a; the other factors are untouched.
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (by_axis[a].d1) {
      std::vector<ad::Var> f = vals;
      f[a] = jets[a].d1;
      out.d1[a] = tape.separable_grid(coeffs, f);
    }
    if (by_axis[a].d2) {
      std::vector<ad::Var> f = vals;
      f[a] = jets[a].d2;
      out.d2[a] = tape.separable_grid(coeffs, f);
    }
  }
  return out;
}

Tensor deeponet_forward(const DeepOnetModel& m, const Tensor& u_sensors, const Tensor& points) {
  check_sensors(u_sensors, m.m);
  if (points.rank() != 2 || points.dim(1) != m.d) {
    throw DimensionError("points must be [P x " + std::to_string(m.d) + "], got " +
                         shape_str(points.shape()));
  }
  Tensor coeffs = mlp_forward(m.branch, u_sensors);  // [F x r]
  Tensor basis = mlp_forward(m.trunk, points);       // [P x r]
  return matmul_nt(coeffs, basis);                   // [F x P]
}

FieldWithDerivs deeponet_field_with_derivs(ad::Tape& tape, const DeepOnetVars& v,
                                           const Tensor& u_sensors, const Tensor& points,
                                           const std::vector<DerivReq>& needed) {
  if (points.rank() != 2) {
    throw DimensionError("points must be [P x d], got " + shape_str(points.shape()));
  }
  const int d = static_cast<int>(points.dim(1));
  const auto by_axis = collect_needs(needed, d);

  ad::Var coeffs = mlp_forward(tape, v.branch, tape.constant(u_sensors));
  ad::Var pts = tape.constant(points);

  FieldWithDerivs out;
  out.dim = d;
  ad::Var basis;  // [P x r]
  bool have_basis = false;
  // One jet pass per axis that needs derivatives; each pass reproduces the
  // same value track, so the first one also supplies the prediction itself.
  for (int a = 0; a < d; ++a) {
    if (!by_axis[static_cast<std::size_t>(a)].any()) continue;
    ad::Jet2 jet = ad::jet_mlp_forward(tape, v.trunk, pts, a);
    if (!have_basis) {
      basis = jet.v;
      have_basis = true;
    }
    if (by_axis[static_cast<std::size_t>(a)].d1) {
      out.d1[static_cast<std::size_t>(a)] = tape.matmul_nt(coeffs, jet.d1);
    }
    if (by_axis[static_cast<std::size_t>(a)].d2) {
      out.d2[static_cast<std::size_t>(a)] = tape.matmul_nt(coeffs, jet.d2);
    }
  }
  if (!have_basis) basis = mlp_forward(tape, v.trunk, pts);
  out.value = tape.matmul_nt(coeffs, basis);
  return out;
}

// ===== initialization =======================================================

namespace {

DenseLayer init_layer(Rng& rng, int64_t out, int64_t in, Activation act, bool first) {
  real bound;
  if (act == Activation::Sine) {
    bound = first ? real(1) / static_cast<real>(in)
                  : std::sqrt(real(6) / static_cast<real>(in));
  } else {
    bound = std::sqrt(real(6) / static_cast<real>(in + out));
  }
  DenseLayer l{Tensor({out, in}), Tensor({out})};
  for (int64_t i = 0; i < l.W.numel(); ++i) {
    l.W[i] = static_cast<real>(rng.uniform(-bound, bound));
  }
  if (act == Activation::Sine) {
    // Random phases: with zero biases every sine unit is odd in its input and
    // the whole trunk starts pinned to zero at the domain origin. The scalar
    // input layer and deeper layers get a 1/sqrt(in) spread.
    const real pb = first ? real(1) : real(1) / std::sqrt(static_cast<real>(in));
    for (int64_t i = 0; i < l.b.numel(); ++i) {
      l.b[i] = static_cast<real>(rng.uniform(-pb, pb));
    }
  }
  return l;  // tanh biases stay zero
}

}  // namespace

MlpParams init_mlp(Rng& rng, int64_t in, int64_t width, int64_t depth, int64_t out,
                   Activation act) {
  if (depth < 1) throw ArgumentError("depth must be >= 1, got " + std::to_string(depth));
  if (in < 1 || out < 1 || (depth > 1 && width < 1)) {
    throw ArgumentError("non-positive layer width");
  }
  MlpParams p;
  p.act = act;
  if (depth == 1) {
    p.layers.push_back(init_layer(rng, out, in, act, true));
  } else {
    p.layers.push_back(init_layer(rng, width, in, act, true));
    for (int64_t l = 0; l < depth - 2; ++l) {
      p.layers.push_back(init_layer(rng, width, width, act, false));
    }
    p.layers.push_back(init_layer(rng, out, width, act, false));
  }
  return p;
}

SepOnetModel init_seponet(uint64_t seed, int64_t m, int64_t d, int64_t r, int64_t width,
                          int64_t depth) {
  if (d < 1 || d > kMaxAxes) throw ArgumentError("d must be in [1, " + std::to_string(kMaxAxes) + "]");
  Rng rng(seed, streams::kInit);
  SepOnetModel model;
  model.r = r;
  model.d = d;
  model.m = m;
  model.seed = seed;
  model.branch = init_mlp(rng, m, width, depth, r, Activation::Tanh);
  for (int64_t n = 0; n < d; ++n) {
    model.trunks.push_back(init_mlp(rng, 1, width, depth, r, Activation::Sine));
  }
  return model;
}

DeepOnetModel init_deeponet(uint64_t seed, int64_t m, int64_t d, int64_t r, int64_t width,
                            int64_t depth) {
  Rng rng(seed, streams::kInit);
  DeepOnetModel model;
  model.r = r;
  model.d = d;
  model.m = m;
  model.seed = seed;
  model.branch = init_mlp(rng, m, width, depth, r, Activation::Tanh);
  model.trunk = init_mlp(rng, d, width, depth, r, Activation::Sine);
  return model;
}

// ===== serialization ========================================================

namespace {

constexpr char kMagic[4] = {'S', 'E', 'P', 'M'};

const char* act_name(Activation a) { return a == Activation::Tanh ? "tanh" : "sine"; }

Activation act_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sine") return Activation::Sine;
  throw ConfigError("unknown activation '" + s + "'");
}

json net_header(const MlpParams& p) {
  json j;
  j["act"] = act_name(p.act);
  std::vector<int64_t> dims{mlp_input_dim(p)};
  for (const DenseLayer& l : p.layers) dims.push_back(l.W.dim(0));
  j["dims"] = dims;
  return j;
}

MlpParams net_from_header(const json& j) {
  MlpParams p;
  p.act = act_from_name(j.at("act").get<std::string>());
  const auto dims = j.at("dims").get<std::vector<int64_t>>();
  if (dims.size() < 2) throw ConfigError("network header needs at least two dims");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    p.layers.push_back(DenseLayer{Tensor({dims[l + 1], dims[l]}), Tensor({dims[l + 1]})});
  }
  return p;
}

void append_blocks(std::vector<const Tensor*>& out, const MlpParams& p) {
  for (const DenseLayer& l : p.layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
}

void append_blocks(std::vector<Tensor*>& out, MlpParams& p) {
  for (DenseLayer& l : p.layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
}

void append_names(std::vector<std::string>& out, const std::string& prefix, const MlpParams& p) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    out.push_back(prefix + ".L" + std::to_string(l) + ".W");
    out.push_back(prefix + ".L" + std::to_string(l) + ".b");
  }
}

void write_block(std::ofstream& f, const Tensor& t) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    double v = static_cast<double>(t[i]);
    f.write(reinterpret_cast<const char*>(&v), sizeof(double));
  }
}

void read_block(std::ifstream& f, Tensor& t) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    double v;
    f.read(reinterpret_cast<char*>(&v), sizeof(double));
    t[i] = static_cast<real>(v);
  }
  if (!f) throw ConfigError("model file truncated inside a parameter block");
}

}  // namespace

std::vector<const Tensor*> param_blocks(const ModelVariant& m) {
  std::vector<const Tensor*> out;
  if (const auto* s = std::get_if<SepOnetModel>(&m)) {
    append_blocks(out, s->branch);
    for (const MlpParams& t : s->trunks) append_blocks(out, t);
  } else {
    const auto& dn = std::get<DeepOnetModel>(m);
    append_blocks(out, dn.branch);
    append_blocks(out, dn.trunk);
  }
  return out;
}

std::vector<Tensor*> param_blocks(ModelVariant& m) {
  std::vector<Tensor*> out;
  if (auto* s = std::get_if<SepOnetModel>(&m)) {
    append_blocks(out, s->branch);
    for (MlpParams& t : s->trunks) append_blocks(out, t);
  } else {
    auto& dn = std::get<DeepOnetModel>(m);
    append_blocks(out, dn.branch);
    append_blocks(out, dn.trunk);
  }
  return out;
}

std::vector<std::string> param_names(const ModelVariant& m) {
  std::vector<std::string> out;
  if (const auto* s = std::get_if<SepOnetModel>(&m)) {
    append_names(out, "branch", s->branch);
    for (std::size_t n = 0; n < s->trunks.size(); ++n) {
      append_names(out, "trunk" + std::to_string(n), s->trunks[n]);
    }
  } else {
    const auto& dn = std::get<DeepOnetModel>(m);
    append_names(out, "branch", dn.branch);
    append_names(out, "trunk", dn.trunk);
  }
  return out;
}

void save_model_with_state(const std::string& path, const ModelVariant& m,
                           const std::map<std::string, std::string>& meta,
                           const std::vector<Tensor>& state_blocks) {
  json header;
  if (const auto* s = std::get_if<SepOnetModel>(&m)) {
    header["kind"] = "seponet";
    header["r"] = s->r;
    header["d"] = s->d;
    header["m"] = s->m;
    header["seed"] = s->seed;
    header["branch"] = net_header(s->branch);
    json trunks = json::array();
    for (const MlpParams& t : s->trunks) trunks.push_back(net_header(t));
    header["trunks"] = trunks;
  } else {
    const auto& dn = std::get<DeepOnetModel>(m);
    header["kind"] = "deeponet";
    header["r"] = dn.r;
    header["d"] = dn.d;
    header["m"] = dn.m;
    header["seed"] = dn.seed;
    header["branch"] = net_header(dn.branch);
    header["trunk"] = net_header(dn.trunk);
  }
  if (!meta.empty()) header["meta"] = meta;
  if (!state_blocks.empty()) {
    json shapes = json::array();
    for (const Tensor& t : state_blocks) shapes.push_back(t.shape());
    header["state_shapes"] = shapes;
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  const std::string hs = header.dump();
  const uint64_t hlen = hs.size();
  f.write(kMagic, 4);
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Tensor* t : param_blocks(m)) write_block(f, *t);
  for (const Tensor& t : state_blocks) write_block(f, t);
  if (!f) throw ConfigError("write to '" + path + "' failed");
}

void save_model(const std::string& path, const ModelVariant& m) {
  save_model_with_state(path, m, {}, {});
}

ModelVariant load_model_with_state(const std::string& path,
                                   std::map<std::string, std::string>* meta,
                                   std::vector<Tensor>* state_blocks) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  char magic[4];
  uint64_t hlen = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw ConfigError("'" + path + "' is not a model file");
  }
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw ConfigError("model header truncated in '" + path + "'");
  const json header = json::parse(hs);

  ModelVariant m;
  const std::string kind = header.at("kind").get<std::string>();
  if (kind == "seponet") {
    SepOnetModel s;
    s.r = header.at("r").get<int64_t>();
    s.d = header.at("d").get<int64_t>();
    s.m = header.at("m").get<int64_t>();
    s.seed = header.at("seed").get<uint64_t>();
    s.branch = net_from_header(header.at("branch"));
    for (const json& t : header.at("trunks")) s.trunks.push_back(net_from_header(t));
    if (static_cast<int64_t>(s.trunks.size()) != s.d) {
      throw ConfigError("header lists " + std::to_string(s.trunks.size()) + " trunks for d=" +
                        std::to_string(s.d));
    }
    m = std::move(s);
  } else if (kind == "deeponet") {
    DeepOnetModel dn;
    dn.r = header.at("r").get<int64_t>();
    dn.d = header.at("d").get<int64_t>();
    dn.m = header.at("m").get<int64_t>();
    dn.seed = header.at("seed").get<uint64_t>();
    dn.branch = net_from_header(header.at("branch"));
    dn.trunk = net_from_header(header.at("trunk"));
    m = std::move(dn);
  } else {
    throw ConfigError("unknown model kind '" + kind + "'");
  }

  for (Tensor* t : param_blocks(m)) read_block(f, *t);

  if (meta) {
    meta->clear();
    if (header.contains("meta")) {
      *meta = header.at("meta").get<std::map<std::string, std::string>>();
    }
  }
  if (state_blocks) {
    state_blocks->clear();
    if (header.contains("state_shapes")) {
      for (const json& sh : header.at("state_shapes")) {
        Tensor t(sh.get<std::vector<int64_t>>());
        read_block(f, t);
        state_blocks->push_back(std::move(t));
      }
    }
  }
  return m;
}

ModelVariant load_model(const std::string& path) {
  return load_model_with_state(path, nullptr, nullptr);
}

}  // namespace sepnet
