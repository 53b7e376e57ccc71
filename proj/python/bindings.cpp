#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mdl/arith.hpp"
#include "mdl/cfrac.hpp"
#include "mdl/circlesets.hpp"
#include "mdl/cli.hpp"
#include "mdl/discrepancy.hpp"
#include "mdl/errors.hpp"
#include "mdl/gallagher.hpp"

namespace py = pybind11;
using namespace mdl;

namespace {

py::object py_int(const mpz_class& z) {
  return py::reinterpret_steal<py::object>(PyLong_FromString(z.get_str().c_str(), nullptr, 10));
}

py::object fraction(const mpq_class& q) {
  static py::object Fraction = py::module_::import("fractions").attr("Fraction");
  return Fraction(py_int(q.get_num()), py_int(q.get_den()));
}

py::tuple enclosure(const Enclosure& e) { return py::make_tuple(fraction(e.lo), fraction(e.hi)); }

mpq_class to_mpq(const py::handle& h) {
  const py::object Fraction = py::module_::import("fractions").attr("Fraction");
  const py::object f = Fraction(h);
  const std::string num = py::str(f.attr("numerator")), den = py::str(f.attr("denominator"));
  mpq_class q{mpz_class(num), mpz_class(den)};
  q.canonicalize();
  return q;
}

gal::PsiPrime make_pp(const std::string& psi, const std::optional<std::string>& beta, const std::string& gamma_prime,
                      const std::optional<std::string>& omega) {
  gal::PsiPrime pp{gal::ApproxFunction::parse(psi), std::nullopt};
  if (beta) {
    gal::Fibre f{RealParam::parse(*beta), RealParam::parse(gamma_prime), std::nullopt};
    if (omega) f.omega = gal::OmegaSpec::parse(*omega);
    pp.fibre = f;
  } else if (omega) {
    throw DomainError("omega needs beta");
  }
  return pp;
}

py::dict measured(const circle::Measured& m) {
  py::dict d;
  d["value"] = fraction(m.value);
  d["err"] = fraction(m.err);
  return d;
}

}  // namespace

PYBIND11_MODULE(_mdl, m) {
  m.doc() = "Exact experiments on inhomogeneous and fibred Diophantine approximation";

  static py::exception<Error> error(m, "Error");
  py::register_exception<CapExceeded>(m, "CapExceeded", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<IrrationalRequired>(m, "IrrationalRequired", error.ptr());
  py::register_exception<DependenceDetected>(m, "DependenceDetected", error.ptr());
  py::register_exception<NotADivisor>(m, "NotADivisor", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  m.def("precision_cap", &precision_cap);
  m.def("set_precision_cap", &set_precision_cap, py::arg("bits"));

  m.def(
      "eval", [](const std::string& x, long bits) { return enclosure(eval(RealParam::parse(x).expr(), bits)); },
      py::arg("x"), py::arg("bits") = 64, "Rational enclosure of width <= 2^-bits.");
  m.def(
      "compare",
      [](const std::string& x, const py::object& t) {
        return std::string(to_string(compare(RealParam::parse(x).expr(), to_mpq(t))));
      },
      py::arg("x"), py::arg("t"));

  m.def(
      "continued_fraction",
      [](const std::string& alpha, std::size_t terms) {
        const cfrac::CFExpansion cf = cfrac::expand(RealParam::parse(alpha), terms);
        py::list qs, cs;
        for (const auto& a : cf.quotients) qs.append(py_int(a));
        for (const auto& c : cf.convergents) cs.append(py::make_tuple(py_int(c.p), py_int(c.q)));
        return py::make_tuple(qs, cs);
      },
      py::arg("alpha"), py::arg("terms") = 10, "(quotients, convergents (p, q)).");
  m.def(
      "sigma",
      [](const std::string& gamma, std::uint64_t N) {
        const cfrac::SigmaEntry e = cfrac::sigma_single(RealParam::parse(gamma), N);
        return py::make_tuple(enclosure(e.sigma), e.k1);
      },
      py::arg("gamma"), py::arg("N"));
  m.def(
      "sigma_pair",
      [](const std::string& gamma, const std::string& beta, std::uint64_t N) {
        const cfrac::SigmaEntry e = cfrac::sigma_pair(RealParam::parse(gamma), RealParam::parse(beta), N);
        return py::make_tuple(enclosure(e.sigma), py::make_tuple(e.k1, e.k2));
      },
      py::arg("gamma"), py::arg("beta"), py::arg("N"));

  m.def("divisors", &arith::divisors, py::arg("q"));
  m.def(
      "F", [](std::uint64_t q) { return enclosure(arith::F_of(q)); }, py::arg("q"));
  m.def(
      "F_average", [](std::uint64_t Q) { return enclosure(arith::F_average(Q)); }, py::arg("Q"));

  m.def(
      "aq_measure",
      [](const py::object& psi, const std::string& gamma, std::uint64_t q) {
        const circle::CircleSet s = circle::build_Aq(to_mpq(psi), RealParam::parse(gamma), q);
        return py::make_tuple(fraction(s.measure()), fraction(s.slack()));
      },
      py::arg("psi"), py::arg("gamma"), py::arg("q"), "(measure, slack) of A_q for a rational psi(q).");
  m.def(
      "pair_sum",
      [](const std::string& psi, const std::string& gamma, std::uint64_t Q) {
        const gal::ApproxFunction f = gal::ApproxFunction::parse(psi);
        return measured(circle::pair_sum([&](std::uint64_t q) { return gal::psi_eval(f, q); }, RealParam::parse(gamma), Q));
      },
      py::arg("psi"), py::arg("gamma"), py::arg("Q"));
  m.def(
      "master_check",
      [](const std::string& psi, const std::string& gamma, std::uint64_t q, std::uint64_t qp, std::uint64_t H,
         const py::object& C0) {
        const gal::ApproxFunction f = gal::ApproxFunction::parse(psi);
        const circle::IntersectionReport r =
            circle::master_check([&](std::uint64_t n) { return f.exact(n); }, RealParam::parse(gamma), q, qp, H, to_mpq(C0));
        return py::module_::import("json").attr("loads")(circle::to_json(r).dump());
      },
      py::arg("psi"), py::arg("gamma"), py::arg("q"), py::arg("qp"), py::arg("H") = 3, py::arg("C0") = 2);

  m.def(
      "star_discrepancy",
      [](const std::string& alpha, std::uint64_t Q) {
        const disc::Discrepancy1D d = disc::star_discrepancy_1d(RealParam::parse(alpha), Q);
        py::dict out;
        out["star"] = enclosure(d.star);
        out["extreme"] = enclosure(d.extreme);
        return out;
      },
      py::arg("alpha"), py::arg("Q"));
  m.def(
      "etk_bound",
      [](const std::vector<std::string>& params, std::uint64_t N, std::uint64_t H) {
        std::vector<RealParam> ps;
        for (const auto& p : params) ps.push_back(RealParam::parse(p));
        return enclosure(disc::etk_bound(ps, N, H).bound);
      },
      py::arg("params"), py::arg("N"), py::arg("H"));

  m.def(
      "psi_prime",
      [](const std::string& psi, std::uint64_t q, std::optional<std::string> beta, const std::string& gamma_prime,
         std::optional<std::string> omega) {
        const gal::PsiPrimeValue v = gal::psi_prime(make_pp(psi, beta, gamma_prime, omega), q);
        return py::make_tuple(enclosure(v.value), gal::to_string(v.status));
      },
      py::arg("psi"), py::arg("q"), py::arg("beta") = py::none(), py::arg("gamma_prime") = "rat:0",
      py::arg("omega") = py::none(), "(enclosure, status).");
  m.def(
      "gl_census",
      [](const std::string& beta, const std::string& gamma_prime, const std::string& omega, std::uint64_t Q) {
        const gal::Census c =
            gal::gl_census(RealParam::parse(beta), RealParam::parse(gamma_prime), gal::OmegaSpec::parse(omega), Q);
        py::dict out;
        for (const auto& [l, qs] : c.cells) out[py::int_(l)] = qs;
        return py::make_tuple(out, c.undecided);
      },
      py::arg("beta"), py::arg("gamma_prime"), py::arg("omega"), py::arg("Q"), "({l: members}, undecided).");
  m.def(
      "bc_ratio",
      [](const std::string& psi, const std::string& gamma, std::uint64_t Q, std::optional<std::string> beta,
         const std::string& gamma_prime, std::optional<std::string> omega) {
        const gal::BCSeries s = gal::bc_ratio(make_pp(psi, beta, gamma_prime, omega), RealParam::parse(gamma), Q);
        return py::make_tuple(fraction(s.back().ratio), enclosure(s.back().ratio_enclosure));
      },
      py::arg("psi"), py::arg("gamma"), py::arg("Q"), py::arg("beta") = py::none(), py::arg("gamma_prime") = "rat:0",
      py::arg("omega") = py::none(), "(ratio, enclosure) at Q.");
  m.def(
      "union_measure",
      [](const std::string& psi, const std::string& gamma, std::uint64_t Q0, std::uint64_t Q) {
        const gal::UnionSeries u = gal::union_series(make_pp(psi, std::nullopt, "rat:0", std::nullopt),
                                                     RealParam::parse(gamma), Q0, Q);
        return measured(u.measures.back());
      },
      py::arg("psi"), py::arg("gamma"), py::arg("Q0"), py::arg("Q"));
  m.def(
      "hit_count",
      [](const std::string& x, const std::string& gamma, const std::string& psi, std::uint64_t Q,
         std::optional<std::string> beta, const std::string& gamma_prime, std::optional<std::string> omega) {
        const gal::HitCount h =
            gal::hit_count(RealParam::parse(x), RealParam::parse(gamma), make_pp(psi, beta, gamma_prime, omega), Q);
        py::dict out;
        out["count"] = h.count;
        out["undecided"] = h.undecided;
        out["degenerate"] = h.degenerate;
        return out;
      },
      py::arg("x"), py::arg("gamma"), py::arg("psi"), py::arg("Q"), py::arg("beta") = py::none(),
      py::arg("gamma_prime") = "rat:0", py::arg("omega") = py::none());
  m.def(
      "mc_survey",
      [](const std::string& gamma, const std::string& psi, std::uint64_t Q, std::uint64_t samples, std::uint64_t seed,
         std::optional<std::string> beta, const std::string& gamma_prime, std::optional<std::string> omega) {
        const gal::MCResult res =
            gal::mc_survey(RealParam::parse(gamma), make_pp(psi, beta, gamma_prime, omega), Q, samples, seed);
        py::dict out;
        out["mean"] = fraction(res.mean);
        out["expected"] = enclosure(res.expected);
        out["deviation"] = enclosure(res.deviation);
        out["undecided"] = res.undecided;
        out["counts"] = res.counts;
        return out;
      },
      py::arg("gamma"), py::arg("psi"), py::arg("Q"), py::arg("samples"), py::arg("seed") = 1,
      py::arg("beta") = py::none(), py::arg("gamma_prime") = "rat:0", py::arg("omega") = py::none());
  m.def(
      "doubly_metric",
      [](const std::string& gamma, const py::object& H, std::uint64_t N, std::uint64_t samples, std::uint64_t seed) {
        const gal::DMResult r = gal::doubly_metric_sample(RealParam::parse(gamma), to_mpq(H), N, samples, seed);
        py::dict out;
        out["fraction"] = fraction(r.fraction);
        out["union_bound"] = enclosure(r.union_bound_enclosure);
        py::list w;
        for (const auto& s : r.per_sample) w.append(py::make_tuple(s.failed, s.k1, s.k2));
        out["samples"] = w;
        return out;
      },
      py::arg("gamma"), py::arg("H"), py::arg("N"), py::arg("samples"), py::arg("seed") = 1);

  m.def(
      "run",
      [](const std::string& config_text) {
        const cli::ExperimentConfig c = cli::ExperimentConfig::from_text(config_text);
        const cli::RunResult r = cli::run(c);
        std::ostringstream os;
        cli::write(os, c, r);
        return py::make_tuple(os.str(), r.exit_code());
      },
      py::arg("config_text"), "Runs a key=value experiment config; returns (output, exit code).");
}
