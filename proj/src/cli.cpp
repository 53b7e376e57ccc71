#include "mdl/cli.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mdl/arith.hpp"
#include "mdl/cfrac.hpp"
#include "mdl/circlesets.hpp"
#include "mdl/discrepancy.hpp"
#include "mdl/errors.hpp"
#include "mdl/gallagher.hpp"
#include "mdl/parallel.hpp"

namespace mdl::cli {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

const std::vector<std::string> kGlobalKeys = {"experiment", "seed", "threads", "precision-bits", "format"};

KeySpec req(std::string name, std::string help) { return {std::move(name), std::nullopt, false, std::move(help)}; }
KeySpec def(std::string name, std::string fallback, std::string help) {
  return {std::move(name), std::move(fallback), false, std::move(help)};
}
KeySpec opt(std::string name, std::string help) { return {std::move(name), std::nullopt, true, std::move(help)}; }

std::vector<KeySpec> with_fibre(std::vector<KeySpec> keys) {
  keys.push_back(opt("beta", "fibre parameter beta; enables psi'(q) = psi(q)/||q beta - gamma'||"));
  keys.push_back(def("gamma-prime", "rat:0", "fibre shift gamma'"));
  keys.push_back(opt("omega", "truncation exponent: rational, sched:c or sched2:c"));
  return keys;
}

}  // namespace

bool is_global_key(std::string_view key) {
  return std::find(kGlobalKeys.begin(), kGlobalKeys.end(), key) != kGlobalKeys.end();
}

// ---------------------------------------------------------------- records

void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << csv_field(r.experiment) << ',' << csv_field(r.params) << ',' << r.q_or_Q << ',' << r.value.get_num() << ','
       << r.value.get_den() << ',' << r.err.get_num() << ',' << r.err.get_den() << ',' << r.undecided << '\n';
  }
}

void write_json(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    arr.push_back({{"experiment", r.experiment},
                   {"params", r.params},
                   {"q_or_Q", r.q_or_Q},
                   {"value_num", r.value.get_num().get_str()},
                   {"value_den", r.value.get_den().get_str()},
                   {"err_num", r.err.get_num().get_str()},
                   {"err_den", r.err.get_den().get_str()},
                   {"undecided_count", r.undecided}});
  }
  os << arr.dump(1) << '\n';
}

// ------------------------------------------------------------ experiments

const std::vector<ExperimentSpec>& experiments() {
  static const std::vector<ExperimentSpec> specs = {
      {"cf", "continued fraction quotients and convergents", {req("alpha", "real parameter"), def("terms", "10", "quotients after a0")}},
      {"sigma", "height-truncated exponent of one parameter",
       {req("gamma", "real parameter"), req("N", "height"), def("profile", "0", "emit every N' <= N"),
        def("allow-literal", "0", "accept decimal literals")}},
      {"sigma-pair", "height-truncated exponent of a pair",
       {req("gamma", "first parameter"), req("beta", "second parameter"), req("N", "height"),
        def("profile", "0", "emit every N' <= N"), def("allow-literal", "0", "accept decimal literals")}},
      {"omega", "truncation schedule omega(q)",
       {req("q", "integer"), def("c", "1", "schedule constant"), def("kind", "triple", "triple or double")}},
      {"divisors", "divisors, d(q) and F(q)", {req("q", "integer")}},
      {"f-avg", "average of F(q) over q <= Q", {req("Q", "range")}},
      {"aq", "measure of A_q", {req("psi", "rational approximation function"), def("gamma", "rat:0", "shift"), req("q", "integer")}},
      {"pairs", "sum of pairwise intersections", {req("psi", "approximation function"), def("gamma", "rat:0", "shift"), req("Q", "range")}},
      {"master-sweep", "intersection lemma over all pairs q' < q <= Q",
       {def("psi", "inv:1/4", "rational approximation function"), req("gamma", "shift"), req("Q", "range"),
        def("H", "3", "case split parameter"), def("C0", "2", "case II constant")}},
      {"box-count", "orbit points inside a box",
       {req("alpha", "comma separated parameters (1 or 2)"), req("Q", "orbit length"),
        req("box", "comma separated sides lo:hi")}},
      {"disc", "discrepancy of the Kronecker orbit",
       {req("alpha", "parameter"), opt("beta", "second parameter (2D grid)"), req("Q", "orbit length"),
        def("m", "64", "grid resolution (2D)"), def("allow-literal", "0", "accept decimal literals")}},
      {"etk", "Erdos-Turan-Koksma bound",
       {req("alpha", "parameter"), opt("beta", "second parameter"), req("N", "orbit length"), req("H", "frequency cutoff")}},
      {"etk-auto", "ETK bound with H chosen from sigma",
       {req("gamma", "first parameter"), req("beta", "second parameter"), req("N", "orbit length"), req("sigma", "exponent")}},
      {"psi-prime", "psi'(q)", with_fibre({req("psi", "approximation function"), req("q", "integer")})},
      {"div-sum", "sum of psi'(q) over q <= Q", with_fibre({req("psi", "approximation function"), req("Q", "range")})},
      {"gl-census", "dyadic cells G^l",
       {req("beta", "fibre parameter"), def("gamma-prime", "rat:0", "fibre shift"), req("omega", "exponent"),
        req("Q", "range"), def("members", "0", "emit one record per member")}},
      {"sklr", "counting sum S_{k,l,r}(q)",
       {req("psi", "approximation function"), req("beta", "fibre parameter"), def("gamma-prime", "rat:0", "fibre shift"),
        req("omega", "exponent"), req("gamma", "shift"), req("q", "integer"), req("k", "magnitude cell"),
        req("l", "rotation cell"), req("r", "divisor of q")}},
      {"f-moments", "sum of F(q)^K over a G^l cell in [Q/2, Q]",
       {req("beta", "fibre parameter"), def("gamma-prime", "rat:0", "fibre shift"), req("omega", "exponent"),
        req("Q", "range"), req("l", "cell"), def("K", "1", "moment")}},
      {"bc-ratio", "Borel-Cantelli ratio",
       with_fibre({req("psi", "approximation function"), def("gamma", "rat:0", "shift"), req("Q", "range"),
                   def("series", "0", "emit every Q' <= Q")})},
      {"union", "measure of the union of A_q for Q0 <= q <= Q",
       with_fibre({req("psi", "approximation function"), def("gamma", "rat:0", "shift"), def("Q0", "1", "first q"),
                   req("Q", "last q"), def("series", "0", "emit every Q' <= Q")})},
      {"hits", "number of q <= Q with ||qx - gamma|| ||q beta - gamma'|| < psi(q)",
       with_fibre({req("x", "point"), def("gamma", "rat:0", "shift"), req("psi", "approximation function"), req("Q", "range")})},
      {"mc-survey", "mean hit count of random x against its expectation",
       with_fibre({def("gamma", "rat:0", "shift"), req("psi", "approximation function"), req("Q", "range"),
                   req("samples", "sample count"), def("per-sample", "0", "emit one record per sample")})},
      {"doubly-metric", "fraction of random beta with a small form k1 gamma + k2 beta",
       {req("gamma", "parameter"), def("H", "3", "exponent H' > 2"), req("N", "height"), req("samples", "sample count"),
        def("per-sample", "0", "emit one record per sample")}},
  };
  return specs;
}

const ExperimentSpec* find_experiment(std::string_view name) {
  for (const auto& s : experiments()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

// ----------------------------------------------------------------- config

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "experiment = " << experiment << '\n';
  os << "seed = " << seed << '\n';
  os << "threads = " << threads << '\n';
  os << "precision-bits = " << precision_bits << '\n';
  os << "format = " << format << '\n';
  for (const auto& [k, v] : params) os << k << " = " << v << '\n';
  return os.str();
}

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || !std::all_of(v.begin(), v.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': integer out of range '" + v + "'");
  }
}

void set_global(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "experiment") c.experiment = v;
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "threads") c.threads = static_cast<unsigned>(to_u64(key, v));
  else if (key == "precision-bits") c.precision_bits = static_cast<long>(to_u64(key, v));
  else if (key == "format") c.format = v;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_text(std::string_view text, std::string_view source) {
  ExperimentConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  std::vector<std::pair<int, std::string>> param_lines;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    try {
      if (is_global_key(key)) {
        set_global(c, key, value);
      } else {
        if (c.params.count(key)) throw ConfigError("duplicate key '" + key + "'");
        c.params[key] = value;
        param_lines.emplace_back(lineno, key);
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (!c.experiment.empty()) {
    const ExperimentSpec* spec = find_experiment(c.experiment);
    if (!spec) throw ConfigError(std::string(source) + ": unknown experiment '" + c.experiment + "'");
    for (const auto& [ln, key] : param_lines) {
      const bool known = std::any_of(spec->keys.begin(), spec->keys.end(), [&](const KeySpec& k) { return k.name == key; });
      if (!known)
        throw ConfigError(std::string(source) + ":" + std::to_string(ln) + ": unknown key '" + key + "' for experiment " +
                          c.experiment);
    }
  }
  return c;
}

void ExperimentConfig::validate() const {
  const ExperimentSpec* spec = find_experiment(experiment);
  if (!spec) throw ConfigError("unknown experiment '" + experiment + "'");
  for (const auto& [key, v] : params) {
    const bool known = std::any_of(spec->keys.begin(), spec->keys.end(), [&](const KeySpec& k) { return k.name == key; });
    if (!known) throw ConfigError("unknown key '" + key + "' for experiment " + experiment);
  }
  for (const auto& k : spec->keys) {
    if (!k.fallback && !k.optional && !params.count(k.name))
      throw ConfigError("missing required key '" + k.name + "' for experiment " + experiment);
  }
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json, got '" + format + "'");
  if (precision_bits < 64) throw ConfigError("precision-bits must be at least 64");
}

std::string ExperimentConfig::canonical_params() const {
  const ExperimentSpec* spec = find_experiment(experiment);
  std::map<std::string, std::string> all = params;
  if (spec) {
    for (const auto& k : spec->keys) {
      if (k.fallback && !all.count(k.name)) all[k.name] = *k.fallback;
    }
  }
  std::string out;
  for (const auto& [k, v] : all) out += (out.empty() ? "" : ";") + k + "=" + v;
  return out;
}

int RunResult::exit_code() const {
  // undecided / tests > 1/100
  return tests > 0 && undecided * 100 > tests ? 2 : 0;
}

// -------------------------------------------------------------------- run

namespace {

class Args {
 public:
  Args(const ExperimentConfig& c, const ExperimentSpec& spec) : c_(c) {
    values_ = c.params;
    for (const auto& k : spec.keys) {
      if (k.fallback && !values_.count(k.name)) values_[k.name] = *k.fallback;
    }
  }
  bool has(const std::string& k) const { return values_.count(k) > 0; }
  const std::string& str(const std::string& k) const {
    auto it = values_.find(k);
    if (it == values_.end()) throw ConfigError("missing key '" + k + "'");
    return it->second;
  }
  std::uint64_t u64(const std::string& k) const { return to_u64(k, str(k)); }
  std::int64_t i64(const std::string& k) const {
    const std::string& v = str(k);
    try {
      std::size_t pos = 0;
      const long long r = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError("key '" + k + "': expected an integer, got '" + v + "'");
    }
  }
  bool flag(const std::string& k) const {
    const std::string& v = str(k);
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("key '" + k + "': expected 0/1, got '" + v + "'");
  }
  mpq_class rat(const std::string& k) const {
    try {
      return parse_rational(str(k));
    } catch (const DomainError& e) {
      throw ConfigError("key '" + k + "': " + e.what());
    }
  }
  RealParam real(const std::string& k) const {
    try {
      return RealParam::parse(str(k));
    } catch (const DomainError& e) {
      throw ConfigError("key '" + k + "': " + e.what());
    }
  }
  std::vector<RealParam> reals(const std::string& k) const {
    std::vector<RealParam> out;
    std::stringstream ss(str(k));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(RealParam::parse(trim(item)));
      } catch (const DomainError& e) {
        throw ConfigError("key '" + k + "': " + e.what());
      }
    }
    return out;
  }
  gal::ApproxFunction psi() const {
    try {
      return gal::ApproxFunction::parse(str("psi"));
    } catch (const DomainError& e) {
      throw ConfigError("key 'psi': " + std::string(e.what()));
    }
  }
  gal::OmegaSpec omega() const {
    try {
      return gal::OmegaSpec::parse(str("omega"));
    } catch (const DomainError& e) {
      throw ConfigError("key 'omega': " + std::string(e.what()));
    }
  }
  gal::PsiPrime psi_prime() const {
    gal::PsiPrime pp{psi(), std::nullopt};
    if (has("beta")) {
      gal::Fibre f{real("beta"), real("gamma-prime"), std::nullopt};
      if (has("omega")) f.omega = omega();
      pp.fibre = f;
    } else if (has("omega")) {
      throw ConfigError("key 'omega' needs 'beta'");
    }
    return pp;
  }
  const ExperimentConfig& config() const { return c_; }

 private:
  const ExperimentConfig& c_;
  std::map<std::string, std::string> values_;
};

struct Emitter {
  RunResult& out;
  std::string experiment_params;

  void add(std::string name, std::uint64_t q, const mpq_class& value, const mpq_class& err = 0,
           std::uint64_t undecided = 0, const std::string& extra = "") {
    out.records.push_back(
        {std::move(name), extra.empty() ? experiment_params : experiment_params + ";" + extra, q, value, err, undecided});
  }
  void add(std::string name, std::uint64_t q, const Enclosure& e, std::uint64_t undecided = 0,
           const std::string& extra = "") {
    add(std::move(name), q, e.mid(), e.radius(), undecided, extra);
  }
  void count(std::string name, std::uint64_t q, std::uint64_t n, std::uint64_t undecided = 0,
             const std::string& extra = "") {
    add(std::move(name), q, mpq_class(mpz_class(static_cast<unsigned long>(n))), 0, undecided, extra);
  }
};


std::string pair_text(std::int64_t a, std::int64_t b) { return "(" + std::to_string(a) + "," + std::to_string(b) + ")"; }

void run_sigma(const Args& a, Emitter& e, bool pair) {
  const std::uint64_t N = a.u64("N");
  const bool lit = a.flag("allow-literal");
  const cfrac::DiophantineProfile p = pair ? cfrac::sigma_profile_pair(a.real("gamma"), a.real("beta"), N, lit)
                                           : cfrac::sigma_profile_single(a.real("gamma"), N, lit);
  for (const auto& s : p.entries) {
    if (!a.flag("profile") && s.N != N) continue;
    e.add(pair ? "sigma_pair" : "sigma", s.N, s.sigma, 0, "witness=" + pair_text(s.k1, s.k2));
  }
  e.out.tests += N;
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
  config.validate();
  const ExperimentSpec& spec = *find_experiment(config.experiment);
  const Args a(config, spec);
  RunResult out;
  Emitter e{out, config.canonical_params()};
  const long saved_cap = precision_cap();
  set_precision_cap(config.precision_bits);
  struct Restore {
    long cap;
    ~Restore() { set_precision_cap(cap); }
  } restore{saved_cap};
  const unsigned threads = config.threads;
  const std::string& x = config.experiment;

  if (x == "cf") {
    const cfrac::CFExpansion cf = cfrac::expand(a.real("alpha"), a.u64("terms"));
    for (std::size_t k = 0; k < cf.quotients.size(); ++k) e.add("cf.quotient", k, mpq_class(cf.quotients[k]));
    for (std::size_t k = 0; k < cf.convergents.size(); ++k) {
      mpq_class c(cf.convergents[k].p, cf.convergents[k].q);
      c.canonicalize();
      e.add("cf.convergent", k, c);
    }
    out.tests += cf.quotients.size();
  } else if (x == "sigma") {
    run_sigma(a, e, false);
  } else if (x == "sigma-pair") {
    run_sigma(a, e, true);
  } else if (x == "omega") {
    const std::string& kind = a.str("kind");
    if (kind != "triple" && kind != "double") throw ConfigError("key 'kind': expected triple or double");
    const std::uint64_t q = a.u64("q");
    e.add("omega", q,
          cfrac::omega_schedule(q, a.rat("c"), kind == "triple" ? cfrac::OmegaKind::triple_log : cfrac::OmegaKind::double_log));
    out.tests += 1;
  } else if (x == "divisors") {
    const arith::DivisorTable t = arith::divisor_table(a.u64("q"));
    e.count("divisors.d", t.q, t.d);
    e.add("divisors.F", t.q, t.F);
    for (auto d : t.divisors) e.count("divisors.divisor", t.q, d);
    out.tests += 1;
  } else if (x == "f-avg") {
    const std::uint64_t Q = a.u64("Q");
    e.add("f_avg", Q, arith::F_average(Q));
    out.tests += 1;
  } else if (x == "aq") {
    const gal::ApproxFunction psi = a.psi();
    const std::uint64_t q = a.u64("q");
    const circle::CircleSet s = circle::build_Aq(psi.exact(q), a.real("gamma"), q);
    e.add("aq.measure", q, s.measure(), s.slack());
    e.count("aq.arcs", q, s.arcs().size());
    out.tests += 1;
  } else if (x == "pairs") {
    const gal::ApproxFunction psi = a.psi();
    const std::uint64_t Q = a.u64("Q");
    const circle::Measured m =
        circle::pair_sum([&](std::uint64_t q) { return gal::psi_eval(psi, q); }, a.real("gamma"), Q, threads);
    e.add("pairs.sum", Q, m.value, m.err);
    out.tests += 1;
  } else if (x == "master-sweep") {
    const gal::ApproxFunction psi = a.psi();
    if (!psi.is_rational()) throw ConfigError("master-sweep needs a rational psi family");
    const std::uint64_t Q = a.u64("Q"), H = a.u64("H");
    const mpq_class C0 = a.rat("C0");
    const RealParam gamma = a.real("gamma");
    const std::uint64_t q_start = std::max<std::uint64_t>(2, psi.q0() + 1);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    for (std::uint64_t q = q_start; q <= Q; ++q) {
      for (std::uint64_t qp = psi.q0(); qp < q; ++qp) pairs.emplace_back(q, qp);
    }
    std::vector<circle::IntersectionReport> reports(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
      reports[i] = circle::master_check([&](std::uint64_t q) { return psi.exact(q); }, gamma, pairs[i].first,
                                        pairs[i].second, H, C0);
    });
    std::uint64_t holds = 0, fails = 0, undecided = 0, case2 = 0;
    mpq_class worst = 0;
    for (const auto& r : reports) {
      holds += r.verdict == circle::Verdict::holds;
      fails += r.verdict == circle::Verdict::fails;
      undecided += r.verdict == circle::Verdict::undecided;
      if (r.bound_case == circle::BoundCase::II) {
        ++case2;
        worst = std::max(worst, r.required_C0);
      }
      if (r.verdict == circle::Verdict::fails)
        e.count("master.failure", r.q, r.qp, 0, std::string("case=") + circle::to_string(r.bound_case));
    }
    e.count("master.pairs", Q, reports.size(), undecided);
    e.count("master.holds", Q, holds);
    e.count("master.fails", Q, fails);
    e.count("master.case2", Q, case2);
    e.add("master.max_required_C0", Q, worst);
    out.tests += reports.size();
    out.undecided += undecided;
  } else if (x == "box-count") {
    disc::Box box;
    std::stringstream ss(a.str("box"));
    std::string side;
    while (std::getline(ss, side, ',')) {
      const auto colon = side.find(':');
      if (colon == std::string::npos) throw ConfigError("key 'box': sides are written lo:hi");
      box.sides.emplace_back(parse_rational(trim(side.substr(0, colon))), parse_rational(trim(side.substr(colon + 1))));
    }
    const std::uint64_t Q = a.u64("Q");
    const disc::BoxCountResult r = disc::box_count(a.reals("alpha"), Q, box);
    e.count("box_count.count", Q, r.count, r.undecided);
    e.add("box_count.error", Q, r.error, 0, r.undecided);
    out.tests += Q;
    out.undecided += r.undecided;
  } else if (x == "disc") {
    const std::uint64_t Q = a.u64("Q");
    if (a.has("beta")) {
      const disc::Grid2D g = disc::disc2d_grid(a.real("alpha"), a.real("beta"), Q, a.u64("m"));
      e.add("disc2d.lower", Q, g.lower, 0, g.undecided);
      e.add("disc2d.upper", Q, g.upper, 0, g.undecided);
      out.tests += Q;
      out.undecided += g.undecided;
    } else {
      const disc::Discrepancy1D d = disc::star_discrepancy_1d(a.real("alpha"), Q, a.flag("allow-literal"));
      e.add("disc.star", Q, d.star);
      e.add("disc.extreme", Q, d.extreme);
      out.tests += Q;
    }
  } else if (x == "etk") {
    std::vector<RealParam> ps{a.real("alpha")};
    if (a.has("beta")) ps.push_back(a.real("beta"));
    const disc::EtkBound b = disc::etk_bound(ps, a.u64("N"), a.u64("H"));
    e.add("etk.bound", b.N, b.bound, 0, "H_used=" + std::to_string(b.H));
    out.tests += 1;
  } else if (x == "etk-auto") {
    const disc::EtkAuto r = disc::etk_autoH(a.real("gamma"), a.real("beta"), a.u64("N"), a.rat("sigma"));
    e.count("etk_auto.H", r.etk.N, r.etk.H);
    e.add("etk_auto.bound", r.etk.N, r.etk.bound);
    e.add("etk_auto.implied_C", r.etk.N, r.implied_C);
    out.tests += 1;
  } else if (x == "psi-prime") {
    const std::uint64_t q = a.u64("q");
    const gal::PsiPrimeValue v = gal::psi_prime(a.psi_prime(), q);
    const std::uint64_t und = v.status == gal::Status::undecided;
    e.add("psi_prime", q, v.value, und, std::string("status=") + gal::to_string(v.status));
    out.tests += 1;
    out.undecided += und;
  } else if (x == "div-sum") {
    const std::uint64_t Q = a.u64("Q");
    const gal::SumResult s = gal::divergence_sum(a.psi_prime(), Q);
    e.add("div_sum", Q, s.value, s.undecided, "degenerate=" + std::to_string(s.degenerate));
    out.tests += Q;
    out.undecided += s.undecided;
  } else if (x == "gl-census") {
    const std::uint64_t Q = a.u64("Q");
    const gal::Census c = gal::gl_census(a.real("beta"), a.real("gamma-prime"), a.omega(), Q);
    for (const auto& [l, members] : c.cells) {
      e.count("gl_census.cell", Q, members.size(), 0, "l=" + std::to_string(l));
      if (a.flag("members")) {
        for (auto q : members) e.count("gl_census.member", q, static_cast<std::uint64_t>(l));
      }
    }
    e.count("gl_census.undecided", Q, c.undecided.size(), c.undecided.size());
    e.count("gl_census.degenerate", Q, c.degenerate.size());
    out.tests += Q;
    out.undecided += c.undecided.size();
  } else if (x == "sklr") {
    const gal::PsiPrime pp{a.psi(), gal::Fibre{a.real("beta"), a.real("gamma-prime"), a.omega()}};
    const std::uint64_t q = a.u64("q");
    const gal::SklrResult s = gal::sklr_sum(pp, a.real("gamma"), q, a.u64("k"), a.i64("l"), a.u64("r"));
    e.count("sklr", q, s.count, s.undecided);
    out.tests += 1 + s.count;
    out.undecided += s.undecided;
  } else if (x == "f-moments") {
    const std::uint64_t Q = a.u64("Q");
    const gal::FMoment m = gal::f_moment_sum(a.real("beta"), a.real("gamma-prime"), a.omega(), Q, a.i64("l"),
                                             static_cast<unsigned>(a.u64("K")));
    e.add("f_moments.sum", Q, m.sum, m.undecided);
    e.add("f_moments.reference", Q, m.reference);
    e.count("f_moments.members", Q, m.members);
    out.tests += Q / 2 + 1;
    out.undecided += m.undecided;
  } else if (x == "bc-ratio") {
    const std::uint64_t Q = a.u64("Q");
    const gal::BCSeries s = gal::bc_ratio(a.psi_prime(), a.real("gamma"), Q, threads);
    for (const auto& entry : s.entries) {
      if (!a.flag("series") && entry.Q != Q) continue;
      e.add("bc_ratio", entry.Q, entry.ratio, std::max(entry.ratio - entry.ratio_enclosure.lo, entry.ratio_enclosure.hi - entry.ratio),
            s.undecided);
      e.add("bc_ratio.measure_sum", entry.Q, entry.measure_sum.value, entry.measure_sum.err);
      e.add("bc_ratio.pair_sum", entry.Q, entry.pair_sum.value, entry.pair_sum.err);
    }
    out.tests += Q;
    out.undecided += s.undecided;
  } else if (x == "union") {
    const std::uint64_t Q = a.u64("Q");
    const gal::UnionSeries u = gal::union_series(a.psi_prime(), a.real("gamma"), a.u64("Q0"), Q);
    for (std::size_t i = 0; i < u.measures.size(); ++i) {
      const std::uint64_t q = u.Q0 + i;
      if (!a.flag("series") && q != Q) continue;
      e.add("union", q, u.measures[i].value, u.measures[i].err, u.undecided);
    }
    out.tests += u.measures.size();
    out.undecided += u.undecided;
  } else if (x == "hits") {
    const std::uint64_t Q = a.u64("Q");
    const gal::HitCount h = gal::hit_count(a.real("x"), a.real("gamma"), a.psi_prime(), Q);
    e.count("hits", Q, h.count, h.undecided, "degenerate=" + std::to_string(h.degenerate));
    out.tests += Q;
    out.undecided += h.undecided;
  } else if (x == "mc-survey") {
    const std::uint64_t Q = a.u64("Q"), n = a.u64("samples");
    const gal::MCResult r = gal::mc_survey(a.real("gamma"), a.psi_prime(), Q, n, config.seed, threads);
    e.add("mc.mean", Q, r.mean, 0, r.undecided);
    e.add("mc.expected", Q, r.expected);
    e.add("mc.deviation", Q, r.deviation);
    if (a.flag("per-sample")) {
      for (std::size_t s = 0; s < r.counts.size(); ++s) e.count("mc.sample", Q, r.counts[s], 0, "sample=" + std::to_string(s));
    }
    out.tests += Q * n;
    out.undecided += r.undecided;
  } else if (x == "doubly-metric") {
    const std::uint64_t N = a.u64("N"), n = a.u64("samples");
    const gal::DMResult r = gal::doubly_metric_sample(a.real("gamma"), a.rat("H"), N, n, config.seed, threads);
    std::uint64_t und = 0;
    for (const auto& s : r.per_sample) und += s.undecided;
    e.add("dm.fraction", N, r.fraction, 0, und);
    e.add("dm.union_bound", N, r.union_bound_enclosure);
    if (a.flag("per-sample")) {
      for (std::size_t s = 0; s < r.per_sample.size(); ++s) {
        const gal::DMSample& d = r.per_sample[s];
        e.add("dm.sample", N, d.failed ? 1 : 0, 0, d.undecided,
              "sample=" + std::to_string(s) + ";witness=" + pair_text(d.k1, d.k2) +
                  (d.dependent ? ";dependent=1" : ";exponent=" + rational_to_string(d.exponent.coarsened(40).mid())));
      }
    }
    out.tests += n;
    out.undecided += und;
  } else {
    throw ConfigError("experiment '" + x + "' is not implemented");
  }
  return out;
}

void write(std::ostream& os, const ExperimentConfig& config, const RunResult& result) {
  if (config.format == "json") {
    write_json(os, result.records);
  } else {
    write_csv(os, result.records);
  }
}

}  // namespace mdl::cli
