#include <thread>

#include "test_support.hpp"

using namespace uframe;
using namespace testing;
using Catch::Approx;

namespace {

OperatorFrame matrix_unit_frame(Eigen::Index d) {
    std::vector<CMatrix> units;
    for (Eigen::Index n = 0; n < d; ++n) {
        for (Eigen::Index m = 0; m < d; ++m) {
            CMatrix e = CMatrix::Zero(d, d);
            e(n, m) = 1.0;
            units.push_back(e);
        }
    }
    return OperatorFrame(std::move(units));
}

OperatorFrame pauli_frame() {
    const double s = 1.0 / std::sqrt(2.0);
    return OperatorFrame({s * identity(2), s * pauli::x(), s * pauli::y(),
                          s * pauli::z()});
}

OperatorFrame random_frame(std::size_t count, Eigen::Index dh, Eigen::Index dk,
                           Rng &rng) {
    std::vector<CMatrix> e;
    for (std::size_t i = 0; i < count; ++i) {
        e.push_back(ginibre(dh, dk, rng));
    }
    return OperatorFrame(std::move(e));
}

double max_element_gap(const std::vector<CMatrix> &a,
                       const std::vector<CMatrix> &b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, max_abs(a[i] - b[i]));
    }
    return worst;
}

} // namespace

TEST_CASE("frame_operator of orthonormal operator bases is the identity", "[frames]") {
    CHECK(max_abs(frame_operator(matrix_unit_frame(2)).matrix - identity(4)) ==
          0.0);
    CHECK(max_abs(frame_operator(pauli_frame()).matrix - identity(4)) < 1e-15);
    CHECK_THROWS_AS(frame_operator(OperatorFrame(std::vector<CMatrix>{})), ValidationError);
}

TEST_CASE("frame_operator is an explicit sum of ket-bras", "[frames]") {
    auto rng = rng_for(31);
    const OperatorFrame frame = random_frame(7, 2, 3, rng);
    CMatrix oracle = CMatrix::Zero(6, 6);
    for (const CMatrix &e : frame.elements()) {
        const CVector v = vec(e);
        oracle += v * v.adjoint();
    }
    const CMatrix &f = frame_operator(frame).matrix;
    CHECK(max_abs(f - oracle) < 1e-12);
    CHECK(hermiticity_defect(f) < 1e-10);
    CHECK(min_eigenvalue(f) > -1e-10);
}

TEST_CASE("frame shape invariants are enforced", "[frames]") {
    CHECK_THROWS_AS(OperatorFrame({identity(2), identity(3)}), DimensionError);
    CHECK_THROWS_AS(OperatorFrame({identity(2)}, {"a", "b"}), DimensionError);
    const OperatorFrame labelled({identity(2)}, {"e"});
    CHECK(labelled.labels().front() == "e");
    CHECK(labelled.dim_h() == 2);
}

TEST_CASE("frame_bounds", "[frames]") {
    FrameBounds b = frame_bounds(pauli_frame());
    CHECK(b.lower == Approx(1.0));
    CHECK(b.upper == Approx(1.0));

    std::vector<CMatrix> doubled = pauli_frame().elements();
    const std::vector<CMatrix> again = doubled;
    doubled.insert(doubled.end(), again.begin(), again.end());
    b = frame_bounds(OperatorFrame(doubled));
    CHECK(b.lower == Approx(2.0));
    CHECK(b.upper == Approx(2.0));
}

TEST_CASE("frame bounds sandwich sum |<A, Xi_i>|^2", "[frames][property]") {
    auto rng = rng_for(32);
    const OperatorFrame frame = random_frame(9, 2, 2, rng);
    const FrameBounds b = frame_bounds(frame);
    for (int trial = 0; trial < 30; ++trial) {
        const CMatrix a = ginibre(2, rng);
        double sum = 0.0;
        for (const CMatrix &e : frame.elements()) {
            sum += std::norm(hs_inner(a, e));
        }
        const double norm2 = a.squaredNorm();
        CHECK(sum >= b.lower * norm2 * (1 - 1e-12));
        CHECK(sum <= b.upper * norm2 * (1 + 1e-12));
    }
}

TEST_CASE("frame bounds scale by |s|^2", "[frames][property]") {
    auto rng = rng_for(33);
    const OperatorFrame frame = random_frame(6, 2, 2, rng);
    const Complex s(1.5, -2.0);
    std::vector<CMatrix> scaled;
    for (const CMatrix &e : frame.elements()) {
        scaled.push_back(s * e);
    }
    const FrameBounds b0 = frame_bounds(frame);
    const FrameBounds b1 = frame_bounds(OperatorFrame(scaled));
    CHECK(b1.lower == Approx(std::norm(s) * b0.lower).epsilon(1e-10));
    CHECK(b1.upper == Approx(std::norm(s) * b0.upper).epsilon(1e-10));
}

TEST_CASE("is_frame", "[frames]") {
    CHECK(is_frame(pauli_frame()));
    CHECK_FALSE(is_frame(OperatorFrame({identity(2), pauli::x(), pauli::y()})));
    CHECK_FALSE(is_frame(OperatorFrame(std::vector<CMatrix>{})));

    const DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
    CHECK_FALSE(is_frame(sud_haar_frame(mixed, 200, 5)));
    CHECK(is_frame(sud_haar_frame(basis_state(2), 200, 5)));

    // relative test: a tiny overall scale does not matter
    const OperatorFrame basis = pauli_frame();
    std::vector<CMatrix> tiny;
    for (const CMatrix &e : basis.elements()) {
        tiny.push_back(1e-9 * e);
    }
    CHECK(is_frame(OperatorFrame(tiny)));
}

TEST_CASE("Haar-sampled SU(2) frame with pure ancilla", "[frames]") {
    const OperatorFrame frame = sud_haar_frame(basis_state(2), 20000, 77);
    const RVector ev = frame.frame_operator_eig().eigenvalues;
    // exact for any sample: Tr[Xi_U] = 1 and weights sum to d
    const CVector bell = vec(identity(2)) / std::sqrt(2.0);
    CHECK(std::abs(bell.dot(frame_operator(frame).matrix * bell) - 1.0) < 1e-12);
    CHECK(ev(3) == Approx(1.0).margin(0.02));
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(ev(i) == Approx(1.0 / 3.0).margin(0.02));
    }
    const FrameBounds b = frame_bounds(frame);
    CHECK(b.lower == Approx(1.0 / 3.0).margin(0.02));
    CHECK(b.upper == Approx(1.0).margin(0.02));

    // canonical dual vs U xi U^dagger with xi = 3 nu^T - I
    const DualFrame dual = canonical_dual(frame);
    const CovariantXi xi = sud_canonical_dual_xi(basis_state(2));
    const SudCovariantPair pair =
        sud_covariant_pair(basis_state(2), xi, 20000, 77);
    CHECK(max_abs(pair.frame.synthesis() - frame.synthesis()) == 0.0);
    const double scale = std::sqrt(2.0 / 20000.0);
    CHECK(max_element_gap(dual.elements, pair.dual.elements) < 0.1 * 3 * scale);
}

TEST_CASE("canonical_dual", "[frames]") {
    const OperatorFrame basis = pauli_frame();
    const DualFrame dual = canonical_dual(basis);
    CHECK(dual.kind == DualKind::canonical);
    CHECK(max_element_gap(dual.elements, basis.elements()) < 1e-14);

    auto rng = rng_for(34);
    const OperatorFrame frame = random_frame(6, 2, 2, rng);
    std::vector<CMatrix> doubled;
    for (const CMatrix &e : frame.elements()) {
        doubled.push_back(2.0 * e);
    }
    const DualFrame d1 = canonical_dual(frame);
    const DualFrame d2 = canonical_dual(OperatorFrame(doubled));
    std::vector<CMatrix> halved;
    for (const CMatrix &e : d1.elements) {
        halved.push_back(e / 2.0);
    }
    CHECK(max_element_gap(d2.elements, halved) < 1e-12);
    CHECK(completeness_defect(frame, d1) < 1e-10);

    CHECK_THROWS_AS(canonical_dual(OperatorFrame({identity(2), pauli::x()})),
                    SingularError);
}

TEST_CASE("canonical dual is F^{-1} applied to each element", "[frames]") {
    auto rng = rng_for(35);
    const OperatorFrame frame = random_frame(10, 2, 3, rng);
    const CMatrix f_inv = frame_operator(frame).matrix.inverse();
    const DualFrame dual = canonical_dual(frame);
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const CMatrix oracle = unvec(f_inv * vec(frame[i]), 2, 3);
        CHECK(max_abs(dual.elements[i] - oracle) < 1e-10);
    }
}

TEST_CASE("alternate_dual", "[frames]") {
    auto rng = rng_for(36);
    const OperatorFrame frame = random_frame(6, 2, 2, rng);
    const DualFrame canonical = canonical_dual(frame);

    const std::vector<CMatrix> zeros(6, CMatrix::Zero(2, 2));
    const DualFrame zero_y = alternate_dual(frame, zeros);
    CHECK(zero_y.kind == DualKind::alternate);
    CHECK(max_element_gap(zero_y.elements, canonical.elements) < 1e-12);

    std::vector<CMatrix> ys;
    for (int i = 0; i < 6; ++i) {
        ys.push_back(ginibre(2, rng));
    }
    const DualFrame alt = alternate_dual(frame, ys);
    CHECK(max_element_gap(alt.elements, canonical.elements) > 1e-3);
    CHECK(completeness_defect(frame, alt) < 1e-8);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix a = ginibre(2, rng);
        CHECK(max_abs(expand(a, frame, alt).reconstruction - a) < 1e-8);
    }

    // orthonormal basis: the correction cancels any Y
    const OperatorFrame basis = pauli_frame();
    std::vector<CMatrix> basis_ys;
    for (int i = 0; i < 4; ++i) {
        basis_ys.push_back(ginibre(2, rng));
    }
    CHECK(max_element_gap(alternate_dual(basis, basis_ys).elements,
                          basis.elements()) < 1e-12);

    CHECK_THROWS_AS(alternate_dual(frame, {identity(2)}), DimensionError);
    std::vector<CMatrix> wrong_shape(6, CMatrix::Zero(3, 3));
    CHECK_THROWS_AS(alternate_dual(frame, wrong_shape), DimensionError);
}

TEST_CASE("alternate dual matches the element-wise sum", "[frames]") {
    auto rng = rng_for(37);
    const OperatorFrame frame = random_frame(7, 2, 2, rng);
    std::vector<CMatrix> ys;
    for (int i = 0; i < 7; ++i) {
        ys.push_back(ginibre(2, rng));
    }
    const CMatrix f_inv = frame_operator(frame).matrix.inverse();
    const DualFrame alt = alternate_dual(frame, ys);
    for (std::size_t i = 0; i < 7; ++i) {
        CVector theta = f_inv * vec(frame[i]) + vec(ys[i]);
        for (std::size_t j = 0; j < 7; ++j) {
            const Complex c = vec(frame[j]).dot(f_inv * vec(frame[i]));
            theta -= c * vec(ys[j]);
        }
        CHECK(max_abs(alt.elements[i] - unvec(theta, 2, 2)) < 1e-10);
    }
}

TEST_CASE("expand", "[frames]") {
    const OperatorFrame basis = pauli_frame();
    const DualFrame dual = canonical_dual(basis);
    const Expansion e = expand(identity(2), basis, dual);
    CHECK(std::abs(e.coefficients(0) - std::sqrt(2.0)) < 1e-14);
    for (Eigen::Index i = 1; i < 4; ++i) {
        CHECK(std::abs(e.coefficients(i)) < 1e-14);
    }
    const Expansion zero = expand(CMatrix::Zero(2, 2), basis, dual);
    CHECK(zero.coefficients.norm() == 0.0);
    CHECK(zero.reconstruction.norm() == 0.0);

    auto rng = rng_for(38);
    const OperatorFrame frame = random_frame(8, 2, 2, rng);
    const CMatrix h = random_hermitian(2, rng);
    CHECK(max_abs(expand(h, frame, canonical_dual(frame)).reconstruction - h) <
          1e-8);
    CHECK_THROWS_AS(expand(identity(3), frame, canonical_dual(frame)),
                    DimensionError);
    DualFrame short_dual = canonical_dual(frame);
    short_dual.elements.pop_back();
    CHECK_THROWS_AS(expand(h, frame, short_dual), DimensionError);
}

TEST_CASE("expand-reconstruct on 50 operators for canonical and alternate duals",
          "[frames][property]") {
    auto rng = rng_for(39);
    for (const auto &[dh, dk] : {std::pair<Eigen::Index, Eigen::Index>{2, 2},
                                 {2, 3},
                                 {3, 3}}) {
        const OperatorFrame frame =
            random_frame(static_cast<std::size_t>(dh * dk + 3), dh, dk, rng);
        REQUIRE(is_frame(frame));
        std::vector<CMatrix> ys;
        for (std::size_t i = 0; i < frame.size(); ++i) {
            ys.push_back(ginibre(dh, dk, rng));
        }
        for (const DualFrame &dual :
             {canonical_dual(frame), alternate_dual(frame, ys)}) {
            for (int trial = 0; trial < 50; ++trial) {
                const CMatrix a = ginibre(dh, dk, rng);
                CHECK(max_abs(expand(a, frame, dual).reconstruction - a) < 1e-8);
                // adjoint form: sum_i Tr[Xi_i^dagger A] Theta_i
                CMatrix adjoint_sum = CMatrix::Zero(dh, dk);
                for (std::size_t i = 0; i < frame.size(); ++i) {
                    adjoint_sum += hs_inner(frame[i], a) * dual.elements[i];
                }
                CHECK(max_abs(adjoint_sum - a) < 1e-8);
            }
        }
    }
}

TEST_CASE("completeness_defect", "[frames]") {
    const OperatorFrame basis = matrix_unit_frame(2);
    DualFrame self;
    self.elements = basis.elements();
    CHECK(completeness_defect(basis, self) < 1e-12);

    auto rng = rng_for(40);
    for (int trial = 0; trial < 10; ++trial) {
        // minimal cardinality: 4 operators for d = 2
        const OperatorFrame frame = random_frame(4, 2, 2, rng);
        const DualFrame dual = canonical_dual(frame);
        CHECK(completeness_defect(frame, dual) < 1e-10);
        for (std::size_t drop = 0; drop < 4; ++drop) {
            std::vector<CMatrix> kept;
            DualFrame kept_dual;
            for (std::size_t i = 0; i < 4; ++i) {
                if (i != drop) {
                    kept.push_back(frame[i]);
                    kept_dual.elements.push_back(dual.elements[i]);
                }
            }
            CHECK(completeness_defect(OperatorFrame(kept), kept_dual) > 0.1);
        }
    }
}

TEST_CASE("weighted frames fold sqrt(w) into the elements", "[frames]") {
    const std::vector<CMatrix> raw = pauli_frame().elements();
    const OperatorFrame w =
        OperatorFrame::weighted(raw, {4.0, 4.0, 4.0, 4.0});
    CHECK(max_abs(w[0] - 2.0 * raw[0]) < 1e-15);
    CHECK(frame_bounds(w).lower == Approx(4.0));
    CHECK_THROWS(OperatorFrame::weighted(raw, {1.0}));
    CHECK_THROWS(OperatorFrame::weighted(raw, {1.0, 1.0, -1.0, 1.0}));
}

TEST_CASE("lazy frame operator is safe under concurrent first access", "[frames]") {
    auto rng = rng_for(41);
    const OperatorFrame frame = random_frame(40, 3, 3, rng);
    const OperatorFrame copy = frame;
    std::vector<const CMatrix *> seen(8, nullptr);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < seen.size(); ++t) {
        threads.emplace_back([&, t] {
            seen[t] = &(t % 2 == 0 ? frame : copy).frame_operator().matrix;
        });
    }
    for (std::thread &t : threads) {
        t.join();
    }
    for (const CMatrix *p : seen) {
        CHECK(p == seen.front());
    }
}
