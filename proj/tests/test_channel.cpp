#include <catch2/catch_amalgamated.hpp>

#include "ura/channel.hpp"

using namespace ura;

TEST_CASE("sample_covariance") {
    SECTION("zero input gives zero matrix") {
        Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(4, 6);
        REQUIRE(sample_covariance(Y).norm() == 0.0);
    }

    SECTION("single column is y y^H") {
        Rng rng(3);
        Eigen::MatrixXcd Y(5, 1);
        for (int i = 0; i < 5; ++i) Y(i, 0) = rng.complex_normal();
        Eigen::MatrixXcd expected = Y.col(0) * Y.col(0).adjoint();
        REQUIRE((sample_covariance(Y) - expected).norm() < 1e-14);
    }

    SECTION("hermitian positive semidefinite for random input") {
        Rng rng(4);
        Eigen::MatrixXcd Y(6, 9);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 9; ++j) Y(i, j) = rng.complex_normal();
        auto cov = sample_covariance(Y);
        REQUIRE((cov - cov.adjoint()).norm() < 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
        REQUIRE(eig.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("simulate_slot") {
    auto cb = generate_codebook(11, 8, 4, 1.0);

    SECTION("no users, no noise") {
        Rng rng(1);
        SlotTransmission tx;
        auto obs = simulate_slot(cb, tx, 4, 0.0, rng);
        REQUIRE(obs.Y.norm() == 0.0);
        REQUIRE(obs.sample_cov.norm() == 0.0);
    }

    SECTION("one user, no noise, single antenna: rank-1 multiple of the column") {
        Rng rng(2);
        SlotTransmission tx;
        tx.indices = {5};
        auto obs = simulate_slot(cb, tx, 1, 0.0, rng);
        REQUIRE(obs.Y.cols() == 1);
        // y = a_5 * h for a scalar h
        const std::complex<double> h = obs.Y(0, 0) / cb.columns(0, 5);
        REQUIRE((obs.Y.col(0) - cb.columns.col(5) * h).norm() < 1e-12 * obs.Y.col(0).norm());
    }

    SECTION("sample covariance converges to the model covariance") {
        Rng rng(5);
        SlotTransmission tx;
        tx.indices = {3, 9};
        const int M = 100000;
        const double N0 = 1.0;
        auto obs = simulate_slot(cb, tx, M, N0, rng);
        Eigen::MatrixXcd model = N0 * Eigen::MatrixXcd::Identity(8, 8);
        model += cb.columns.col(3) * cb.columns.col(3).adjoint();
        model += cb.columns.col(9) * cb.columns.col(9).adjoint();
        const double rel = (obs.sample_cov - model).norm() / model.norm();
        REQUIRE(rel < 0.02);
    }

    SECTION("colliding users superpose: expected covariance doubles the entry") {
        Rng rng(6);
        SlotTransmission tx;
        tx.indices = {7, 7};  // two users on the same column
        const int M = 100000;
        const double N0 = 0.5;
        auto obs = simulate_slot(cb, tx, M, N0, rng);
        Eigen::MatrixXcd model = N0 * Eigen::MatrixXcd::Identity(8, 8);
        model += 2.0 * cb.columns.col(7) * cb.columns.col(7).adjoint();
        const double rel = (obs.sample_cov - model).norm() / model.norm();
        REQUIRE(rel < 0.02);
    }

    SECTION("deterministic given the stream seed") {
        SlotTransmission tx;
        tx.indices = {1, 2};
        Rng r1(9), r2(9);
        auto a = simulate_slot(cb, tx, 7, 1.0, r1);
        auto b = simulate_slot(cb, tx, 7, 1.0, r2);
        REQUIRE(a.Y == b.Y);
    }

    SECTION("rejects bad arguments") {
        Rng rng(1);
        SlotTransmission tx;
        tx.indices = {999};
        REQUIRE_THROWS_AS(simulate_slot(cb, tx, 4, 1.0, rng), std::invalid_argument);
        tx.indices = {1};
        REQUIRE_THROWS_AS(simulate_slot(cb, tx, 0, 1.0, rng), std::invalid_argument);
    }
}
