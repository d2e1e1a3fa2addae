#include "helpers.hpp"

#include "synthaudit/error.hpp"
#include "synthaudit/quality.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace synthaudit;

using testing::gaussian;

TEST_SUITE("quality") {

TEST_CASE("matrix square root") {
    CHECK(matrix_sqrt_psd(Eigen::MatrixXd::Identity(3, 3)).isApprox(Eigen::MatrixXd::Identity(3, 3)));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    const Eigen::MatrixXd s = matrix_sqrt_psd(d);
    CHECK(s(0, 0) == doctest::Approx(2.0));
    CHECK(s(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(s(0, 1)) < 1e-12);

    const Eigen::MatrixXd a = gaussian(5, 5, 0, 1, 17);
    const Eigen::MatrixXd m = a.transpose() * a;
    const Eigen::MatrixXd r = matrix_sqrt_psd(m);
    CHECK((r * r - m).norm() / m.norm() < 1e-8);

    Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(2, 2);
    neg(1, 1) = -1;
    CHECK_THROWS_AS(matrix_sqrt_psd(neg), InputError);
}

TEST_CASE("fid") {
    const Eigen::MatrixXd a = gaussian(200, 8, 0, 1, 1);
    CHECK(fid(a, a).value <= 1e-6);

    Eigen::RowVectorXd delta(8);
    delta << 1, -2, 0.5, 0, 0, 3, 0, -1;
    const Eigen::MatrixXd shifted = a.rowwise() + delta;
    CHECK(std::abs(fid(a, shifted).value - delta.squaredNorm()) < 1e-6);

    // scalar closed form: (0 - 1)^2 + 1 + 4 - 2 * sqrt(1 * 4) = 2
    GaussianSummary g1{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1.0)};
    GaussianSummary g2{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 4.0)};
    CHECK(frechet_distance(g1, g2) == doctest::Approx(2.0).epsilon(1e-12));

    const auto low = fid(gaussian(4, 8, 0, 1, 2), gaussian(5, 8, 0, 1, 3));
    CHECK(low.low_sample_mode);
    CHECK(std::isfinite(low.value));
    CHECK(low.value >= 0);

    CHECK_THROWS_AS(fid(gaussian(10, 3, 0, 1, 4), gaussian(10, 4, 0, 1, 5)), InputError);
    CHECK_THROWS_AS(fid(gaussian(1, 3, 0, 1, 4), gaussian(10, 3, 0, 1, 5)), InputError);
}

TEST_CASE("mauve curve points") {
    // P = [1, 0], Q = [0, 1], lambda = 0.5: R = [.5, .5], KL = ln 2 each,
    // so both coordinates are exp(-5 ln 2) = 2^-5.
    const auto pt = divergence_point({1.0, 0.0}, {0.0, 1.0}, 0.5, 5.0);
    CHECK(std::abs(pt.first - 0.03125) < 1e-9);
    CHECK(std::abs(pt.second - 0.03125) < 1e-9);

    CHECK(kl_divergence({0.5, 0.5}, {0.5, 0.5}) == 0.0);
    const auto same = mauve_from_histograms({0.25, 0.75}, {0.25, 0.75}, 5.0, 25);
    CHECK(same.score > 0.99);
    CHECK(same.curve.size() == 27);
    CHECK(same.curve.front() == std::pair<double, double>{0.0, 1.0});
    CHECK(same.curve.back() == std::pair<double, double>{1.0, 0.0});

    const auto disjoint = mauve_from_histograms({1.0, 0.0}, {0.0, 1.0}, 5.0, 25);
    CHECK(disjoint.score < 0.1);
    CHECK_THROWS_AS(mauve_from_histograms({1.0}, {0.5, 0.5}, 5.0, 25), InputError);
}

TEST_CASE("mauve on embeddings") {
    const Eigen::MatrixXd a = gaussian(300, 4, 0, 1, 9);
    MauveOptions opts;
    opts.seed = 4;
    CHECK(mauve(a, a, opts).score >= 0.99);

    Eigen::MatrixXd left = gaussian(200, 2, 0, 0.1, 10);
    left.array() -= 10.0;
    Eigen::MatrixXd right = gaussian(200, 2, 0, 0.1, 11);
    right.array() += 10.0;
    const auto sep = mauve(left, right, opts);
    CHECK(sep.score < 0.1);
    CHECK(sep.clusters == default_mauve_clusters(400));

    const auto again = mauve(left, right, opts);
    CHECK(again.score == sep.score);

    CHECK(default_mauve_clusters(10000) == 500);
    CHECK(default_mauve_clusters(300) == 30);
    CHECK(default_mauve_clusters(5) == 2);

    opts.clusters = 3;
    CHECK_THROWS_AS(mauve(Eigen::MatrixXd::Zero(5, 2), Eigen::MatrixXd::Zero(5, 2), opts), InputError);
}

TEST_CASE("kmeans separates obvious clusters") {
    Eigen::MatrixXd pts(6, 1);
    pts << 0, 0.1, 0.2, 10, 10.1, 10.2;
    const auto r = kmeans(pts, 2, 1);
    CHECK(r.assignment[0] == r.assignment[1]);
    CHECK(r.assignment[1] == r.assignment[2]);
    CHECK(r.assignment[3] == r.assignment[4]);
    CHECK(r.assignment[0] != r.assignment[3]);
}

TEST_CASE("perplexity") {
    CHECK(perplexity(std::vector<double>(7, -std::log(2.0))) == 2.0);
    CHECK(perplexity(std::vector<double>{0.0}) == 1.0);
    CHECK(std::abs(perplexity(std::vector<double>{-1.0, -3.0}) - std::exp(2.0)) < 1e-9);

    ScoreSet s;
    s.add("a", {-std::log(2.0)});
    s.add("b", {-std::log(4.0), -std::log(4.0)});
    const auto both = corpus_perplexity(s, Corpus({testing::doc("a", "x"), testing::doc("b", "y")}));
    CHECK(both.mean == doctest::Approx(3.0));
    CHECK(both.median == doctest::Approx(3.0));

    const auto one = corpus_perplexity(s, Corpus({testing::doc("a", "x")}));
    CHECK(one.mean == one.median);

    try {
        corpus_perplexity(s, Corpus({testing::doc("a", "x"), testing::doc("zzz", "y")}));
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("zzz") != std::string::npos);
    }
}

TEST_CASE("embedding files") {
    Eigen::MatrixXd v(2, 3);
    v << 0.5, -1.25, 3, 1e-3, 2, -7.75;
    const EmbeddingMatrix m({"x", "y z"}, v);

    std::stringstream text;
    write_embeddings_text(EmbeddingMatrix({"x", "y"}, v), text);
    const auto back = parse_embeddings_text(text);
    CHECK(back.ids() == std::vector<std::string>{"x", "y"});
    CHECK(back.vectors().isApprox(v, 1e-15));

    std::stringstream bin;
    write_embeddings_binary(m, bin);
    const auto bback = parse_embeddings_binary(bin);
    CHECK(bback.ids() == m.ids());
    CHECK(bback.vectors().isApprox(v, 1e-6)); // float32 storage

    const auto dir = testing::temp_dir("emb");
    save_embeddings(m, dir / "e.bin", true);
    CHECK(load_embeddings(dir / "e.bin").ids() == m.ids());
    testing::write_file(dir / "bad.emb", "synthaudit-emb v1 2 2\na 1 2\nb 1\n");
    CHECK_THROWS_AS(load_embeddings(dir / "bad.emb"), InputError);
    testing::write_file(dir / "nan.emb", "synthaudit-emb v1 1 2\na 1 nan\n");
    CHECK_THROWS_AS(load_embeddings(dir / "nan.emb"), InputError);
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(EmbeddingMatrix({"a", "a"}, Eigen::MatrixXd::Zero(2, 2)), InputError);
}

} // TEST_SUITE
