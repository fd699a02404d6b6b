#pragma once

#include <polyext/base.hh>
#include <polyext/funcspec.hh>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace polyext {

using CoeffVec = std::vector<cplx>;
using Perm = std::vector<int>;

/// Monic polynomial t^n + c_{n-1} t^{n-1} + ... + c_0 with coefficients sampled on a base.
/// Optional exact forms give coefficient (and root) values away from samples.
class MonicPolynomial {
public:
    using ExactCoeffs = std::function<CoeffVec(const Coordinate &)>;
    using ExactRoots = std::function<std::vector<cplx>(const Coordinate &)>;

    MonicPolynomial(std::vector<SampledFunction> coeffs, ExactCoeffs exact = {}, ExactRoots roots = {});

    int degree() const noexcept { return static_cast<int>(coeffs_.size()); }
    const BasePtr & base() const noexcept { return coeffs_.front().base; }
    const std::vector<SampledFunction> & coeffs() const noexcept { return coeffs_; }

    CoeffVec coefficients_at_sample(int sample) const;
    /// Sampled values at samples; exact form elsewhere when available, else linear interpolation.
    CoeffVec coefficients_at(const EdgePoint & p) const;

    bool has_exact() const noexcept { return static_cast<bool>(exact_); }
    CoeffVec exact_coefficients(const Coordinate & c) const;
    bool has_exact_roots() const noexcept { return static_cast<bool>(roots_); }
    std::vector<cplx> exact_roots(const Coordinate & c) const;
    const ExactCoeffs & exact_form() const noexcept { return exact_; }
    const ExactRoots & exact_root_form() const noexcept { return roots_; }

private:
    std::vector<SampledFunction> coeffs_;
    ExactCoeffs exact_;
    ExactRoots roots_;
};

using PolyPtr = std::shared_ptr<const MonicPolynomial>;

/// Coefficients c_0..c_{n-1} given as expressions.
MonicPolynomial polynomial_from_exprs(const BasePtr & base, const std::vector<Expr> & coeffs);
/// Factored form prod_j (t - lambda_j).
MonicPolynomial polynomial_from_roots(const BasePtr & base, const std::vector<Expr> & roots);
MonicPolynomial polynomial_from_samples(std::vector<SampledFunction> coeffs);

/// Coefficients of prod_j (t - r_j), constant term first, leading 1 dropped.
CoeffVec expand_roots(const std::vector<cplx> & roots);

/// p(t) for the monic polynomial with lower coefficients c.
cplx eval_monic(const CoeffVec & c, cplx t);

/// All roots with multiplicity, Newton-polished, in canonical (Re, Im) order.
std::vector<cplx> solve_fiber(const CoeffVec & coeffs);

/// Stable (Re, Im) order with tie tolerance 1e-12.
void canonical_sort(std::vector<cplx> & roots);

struct BundleOptions {
    double branch_tol = 1e-6;
    int max_depth = 12;
};

struct BranchEvent {
    int edge;
    double t;
    double gap;
    cplx value;
};

struct MicroSample {
    double t;
    std::vector<cplx> fiber;
};

/// Discretized root surface: fibers at samples, sheet matchings along edges, branch data.
struct RootBundle {
    BasePtr base;
    PolyPtr poly;
    int degree = 0;
    double branch_tol = 1e-6;
    std::vector<std::vector<cplx>> fibers;
    /// edge_perms[e][i] = head-fiber index matched to tail-fiber index i
    std::vector<Perm> edge_perms;
    std::vector<bool> branch_flags;
    std::vector<std::vector<MicroSample>> refinement;
    std::vector<BranchEvent> events;
    /// per sample: cluster id of every sheet; sheets in one cluster coincide at that sample
    std::vector<std::vector<int>> cluster_of;
    std::vector<int> cluster_count;

    int sample_count() const noexcept { return static_cast<int>(fibers.size()); }
    /// Mean value of the sheets in a cluster.
    cplx cluster_value(int sample, int cluster) const;
    double min_gap(int sample) const;
    bool branch_free() const;
};

RootBundle build_bundle(const MonicPolynomial & p, const BundleOptions & opts = {});
RootBundle build_bundle(PolyPtr p, const BundleOptions & opts = {});

/// p^(T): coefficients of p read at the image points of phi.
MonicPolynomial pullback_polynomial(const MonicPolynomial & p, const SelfMap & phi);
RootBundle pullback(const MonicPolynomial & p, const SelfMap & phi, const BundleOptions & opts = {});

Perm inverse(const Perm & p);
/// (a o b)(i) = a[b[i]]
Perm compose(const Perm & a, const Perm & b);

/// Product formula prod_{i<j} (l_i - l_j)^2 on the bundle fibers.
SampledFunction discriminant(const RootBundle & bundle);
SampledFunction discriminant(const MonicPolynomial & p);
/// (-1)^{n(n-1)/2} Res(p, p') by a Sylvester determinant.
cplx discriminant_by_resultant(const CoeffVec & coeffs);

struct DiscriminantCheck {
    double max_rel_error = 0.0;
    int worst_sample = -1;
    int compared = 0;
};

/// Compares the two discriminant routes at samples whose fibers are well separated.
DiscriminantCheck check_discriminant(const RootBundle & bundle);

struct AdmissibilityReport {
    bool admissible = true;
    double zero_tol = 0.0;
    int window = 0;
    std::vector<std::vector<int>> runs;
};

/// Not admissible when some connected set of >= window samples has |D_p| below the zero tolerance.
/// zero_tol <= 0 selects 1e-12 * (1 + max|root|)^{n(n-1)}; window <= 0 selects max(5, N/100).
AdmissibilityReport is_admissible(const MonicPolynomial & p, double zero_tol = 0.0, int window = 0);
AdmissibilityReport is_admissible(const RootBundle & bundle, double zero_tol = 0.0, int window = 0);

/// Values sum_k q_k(x) lambda^k at every bundle point.
std::vector<std::vector<cplx>> evaluate_poly_on_bundle(const std::vector<SampledFunction> & q, const RootBundle & bundle);

/// CSV: sample_index, coordinate(s), sheet_index, root_re, root_im, branch_flag.
void write_bundle_csv(const RootBundle & bundle, std::ostream & out);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

}
