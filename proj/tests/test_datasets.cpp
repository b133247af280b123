#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "uvlab/datasets.hpp"

using namespace uvlab;

namespace {

Eigen::MatrixXd to_eigen(const Mat& m) {
    Eigen::MatrixXd e(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) e(long(i), long(j)) = m(i, j);
    return e;
}

Eigen::VectorXd singular_values(const Mat& m) {
    return Eigen::BDCSVD<Eigen::MatrixXd>(to_eigen(m)).singularValues();
}

}  // namespace

TEST_CASE("make_random: moments, cross-covariance, determinism") {
    std::mt19937_64 rng(101);
    Dataset ds = make_random(1250, 40, 40, rng);  // 1e5 entries in X and Y
    double sum = 0.0, sq = 0.0;
    for (double v : ds.x.a) {
        sum += v;
        sq += v * v;
    }
    const double n = double(ds.x.a.size());
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / n));

    // empirical cross-covariance entries are O(1/sqrt(P)) at 5 SE
    Mat cross = matmul_tn(ds.x, ds.y);
    for (double v : cross.a) CHECK(std::abs(v / double(ds.x.rows)) <= 5.0 / std::sqrt(double(ds.x.rows)));

    std::mt19937_64 r1(7), r2(7);
    Dataset a = make_random(10, 3, 2, r1);
    Dataset b = make_random(10, 3, 2, r2);
    CHECK(a.x.a == b.x.a);
    CHECK(a.y.a == b.y.a);
}

TEST_CASE("teacher-student: targets live in the teacher's row space") {
    std::mt19937_64 rng(99);
    NetworkConfig teacher;
    teacher.depth = 2;
    teacher.width = 3;  // rank bottleneck 3
    teacher.activation = Activation::linear;
    teacher.param = Parameterization::sp;
    Dataset ds = make_teacher_student(teacher, 64, 10, 8, rng);
    REQUIRE(ds.y.rows == 64);
    REQUIRE(ds.y.cols == 8);
    Eigen::VectorXd sv = singular_values(ds.y);
    int effective_rank = 0;
    for (long i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-9 * sv(0)) ++effective_rank;
    CHECK(effective_rank <= 3);
}

TEST_CASE("teacher-student: zero-variance teacher emits zero targets") {
    std::mt19937_64 rng(5);
    NetworkConfig teacher;
    teacher.depth = 2;
    teacher.width = 4;
    teacher.activation = Activation::linear;
    teacher.param = Parameterization::sp;
    teacher.sigma_w2 = 1e-30;
    Dataset ds = make_teacher_student(teacher, 16, 5, 2, rng);
    for (double v : ds.y.a) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("teacher-student: a student replaying the teacher's stream starts at zero loss") {
    NetworkConfig cfg;
    cfg.depth = 2;
    cfg.width = 6;
    cfg.activation = Activation::relu;
    cfg.param = Parameterization::sp;
    std::mt19937_64 data_rng(404);
    Dataset ds = make_teacher_student(cfg, 32, 5, 3, data_rng);

    // advance a clone of the generator past the input draws, then initialize
    // the student exactly where the teacher was initialized
    std::mt19937_64 replay(404);
    {
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < 32 * 5; ++i) (void)g(replay);
    }
    NetParams student = init_network(cfg, 5, 3, replay);
    auto [loss, grad] = loss_and_grad(student, cfg, ds.x, ds.y);
    CHECK(loss == 0.0);
    (void)grad;

    std::mt19937_64 again(404);
    Dataset ds2 = make_teacher_student(cfg, 32, 5, 3, again);
    CHECK(ds.y.a == ds2.y.a);
}

TEST_CASE("power law: identity rescale reconstructs the matrix") {
    std::mt19937_64 rng(11);
    PowerLawSpec spec;  // A = 1, B = 0
    std::mt19937_64 rng_ref(11);
    Dataset ref = make_random(24, 12, 6, rng_ref);
    Dataset ds = make_power_law(24, 12, 6, spec, rng);
    REQUIRE(ds.x.a.size() == ref.x.a.size());
    for (std::size_t i = 0; i < ds.x.a.size(); ++i)
        CHECK(std::abs(ds.x.a[i] - ref.x.a[i]) <= 1e-8);
    for (std::size_t i = 0; i < ds.y.a.size(); ++i)
        CHECK(std::abs(ds.y.a[i] - ref.y.a[i]) <= 1e-8);
}

TEST_CASE("power law: k-th singular value follows the rescale law") {
    std::mt19937_64 rng(12);
    std::mt19937_64 rng_ref(12);
    Dataset ref = make_random(30, 10, 4, rng_ref);
    PowerLawSpec spec;
    spec.b_x = 1.0;
    spec.a_x = 1.5;
    Dataset ds = make_power_law(30, 10, 4, spec, rng);
    Eigen::VectorXd s_ref = singular_values(ref.x);
    Eigen::VectorXd s_new = singular_values(ds.x);
    for (long kk = 0; kk < s_ref.size(); ++kk) {
        const double expect = 1.5 * s_ref(kk) * std::pow(double(kk + 1), -1.0);
        CHECK(std::abs(s_new(kk) - expect) <= 1e-8 * std::max(1.0, expect));
    }
    // Y untouched by the X-spec
    Eigen::VectorXd sy_ref = singular_values(ref.y);
    Eigen::VectorXd sy_new = singular_values(ds.y);
    for (long kk = 0; kk < sy_ref.size(); ++kk)
        CHECK(std::abs(sy_new(kk) - sy_ref(kk)) <= 1e-8 * std::max(1.0, sy_ref(kk)));
}

TEST_CASE("power law: the four reference exponent combinations") {
    for (double bx : {0.0, 1.0}) {
        for (double by : {0.0, 1.0}) {
            std::mt19937_64 rng(77);
            PowerLawSpec spec{1.0, bx, 1.0, by};
            Dataset ds = make_power_law(20, 8, 4, spec, rng);
            std::mt19937_64 rng_ref(77);
            Dataset ref = make_random(20, 8, 4, rng_ref);
            Eigen::VectorXd sx = singular_values(ds.x), sx0 = singular_values(ref.x);
            Eigen::VectorXd sy = singular_values(ds.y), sy0 = singular_values(ref.y);
            for (long kk = 0; kk < sx.size(); ++kk)
                CHECK(std::abs(sx(kk) - sx0(kk) * std::pow(double(kk + 1), -bx)) <= 1e-8);
            for (long kk = 0; kk < sy.size(); ++kk)
                CHECK(std::abs(sy(kk) - sy0(kk) * std::pow(double(kk + 1), -by)) <= 1e-8);
        }
    }
}

TEST_CASE("single example") {
    Dataset ds = make_single_example(1.0, 3, 2.0);
    REQUIRE(ds.x.rows == 1);
    REQUIRE(ds.x.cols == 3);
    CHECK(ds.x(0, 0) == 1.0);
    CHECK(ds.x(0, 1) == 0.0);
    CHECK(ds.x(0, 2) == 0.0);
    CHECK(ds.y(0, 0) == 2.0);

    Dataset dn = make_single_example(2.5, 4, -1.0);
    double norm = 0.0;
    for (double v : dn.x.a) norm += v * v;
    CHECK(std::sqrt(norm) == 2.5);
}

TEST_CASE("load_csv and standardize") {
    {
        std::ofstream out("ds_test.csv");
        out << "1.0,5.0,0.5\n3.0,5.0,-0.5\n";
    }
    Dataset ds = load_csv("ds_test.csv", 2, 1);
    REQUIRE(ds.x.rows == 2);
    CHECK(ds.x(0, 0) == 1.0);
    CHECK(ds.y(1, 0) == -0.5);

    StandardizeResult st = standardize(ds);
    // column {1, 3}: mean 2, population SD 1 -> {-1, 1}
    CHECK(st.data.x(0, 0) == -1.0);
    CHECK(st.data.x(1, 0) == 1.0);
    // constant column centered and flagged
    REQUIRE(st.constant_columns.size() == 1);
    CHECK(st.constant_columns[0] == 1);
    CHECK(st.data.x(0, 1) == 0.0);
    CHECK(st.data.x(1, 1) == 0.0);
    // targets untouched
    CHECK(st.data.y(0, 0) == 0.5);

    // idempotence
    StandardizeResult st2 = standardize(st.data);
    for (std::size_t i = 0; i < st.data.x.a.size(); ++i)
        CHECK(std::abs(st2.data.x.a[i] - st.data.x.a[i]) <= 1e-12);

    std::remove("ds_test.csv");
}

TEST_CASE("load_csv rejects malformed rows") {
    {
        std::ofstream out("ds_bad.csv");
        out << "1.0,2.0\n3.0\n";
    }
    CHECK_THROWS_AS(load_csv("ds_bad.csv", 1, 1), std::runtime_error);
    {
        std::ofstream out("ds_bad.csv");
        out << "1.0,abc\n";
    }
    CHECK_THROWS_AS(load_csv("ds_bad.csv", 1, 1), std::runtime_error);
    std::remove("ds_bad.csv");
    CHECK_THROWS_AS(load_csv("no_such_file.csv", 1, 1), std::runtime_error);
}

TEST_CASE("dataset CSV round trip with header flag") {
    std::mt19937_64 rng(8);
    Dataset ds = make_random(5, 3, 2, rng);
    dataset_to_csv(ds, "ds_rt.csv", true);
    Dataset back = load_csv("ds_rt.csv", 3, 2, true);
    REQUIRE(back.x.a.size() == ds.x.a.size());
    for (std::size_t i = 0; i < ds.x.a.size(); ++i) CHECK(back.x.a[i] == ds.x.a[i]);
    for (std::size_t i = 0; i < ds.y.a.size(); ++i) CHECK(back.y.a[i] == ds.y.a[i]);
    std::remove("ds_rt.csv");
}

TEST_CASE("independent seeds give independent draws") {
    std::mt19937_64 r1(derive_seed(9, 0));
    std::mt19937_64 r2(derive_seed(9, 1));
    Dataset a = make_random(4, 3, 1, r1);
    Dataset b = make_random(4, 3, 1, r2);
    CHECK(a.x.a != b.x.a);
}
