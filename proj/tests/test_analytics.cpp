#include <numeric>

#include "doctest.h"
#include "tcm/analytics.hpp"
#include "tcm/iphc_codec.hpp"

using namespace tcm;

namespace {

SavingsInput wow_up(double e_k)
{
    SavingsInput in;
    in.e_k = e_k;
    in.e_p = 8.74;
    in.e_rh = 8.72;
    return in;
}

RunArtifacts small_run(TimeUs pe, std::uint32_t players = 10, Direction dir = Direction::ClientToServer)
{
    MuxConfig cfg;
    cfg.period_us = pe;
    return simulate_run(wow_profile(), dir, players, 3000, 21, cfg);
}

} // namespace

TEST_CASE("bandwidth saving closed form")
{
    CHECK(bws_asymptote(40, 2, 8.74, 8.72) == doctest::Approx(0.6007).epsilon(1e-4));
    CHECK(bws_asymptote(40, 2, 314, 7.37) == doctest::Approx(0.0865).epsilon(1e-3));
    CHECK(bws(wow_up(1)) == doctest::Approx(1 - 25 / 48.74 - 19.46 / 48.74));
    CHECK(std::abs(bws(wow_up(1)) - 0.0878) <= 5e-5);
    for (double k : {1.0, 3.0, 100.0}) {
        SavingsInput same;
        same.e_k = k;
        same.ch = 0;
        same.mh = 0;
        same.e_p = 50;
        same.e_rh = 40;
        CHECK(bws(same) == doctest::Approx(0.0));
    }
}

TEST_CASE("game asymptotes")
{
    // per-direction WoW reduced headers applied to the single-size games
    CHECK(std::abs(bws_asymptote(40, 2, 25, 8.72) - 0.451) <= 1e-3);
    CHECK(std::abs(bws_asymptote(40, 2, 33, 8.72) - 0.401) <= 1e-3);
    CHECK(std::abs(bws_asymptote(40, 2, 114, 7.37) - 0.1988) <= 1e-3);
    CHECK(std::abs(bws_asymptote(40, 2, 99, 7.37) - 0.22) <= 1e-3);
}

TEST_CASE("bws grows with E[k] and stays below the asymptote")
{
    double prev = -1e9;
    const double lim = bws_asymptote(40, 2, 8.74, 8.72);
    for (double k = 0.5; k < 5000; k *= 1.3) {
        const double v = bws(wow_up(k));
        CHECK(v > prev);
        CHECK(v < lim);
        prev = v;
    }
    CHECK(bws(wow_up(1e9)) == doctest::Approx(lim).epsilon(1e-6));
}

TEST_CASE("degenerate inputs are rejected")
{
    CHECK_THROWS_AS(bws(wow_up(0)), std::invalid_argument);
    SavingsInput bad = wow_up(1);
    bad.nh = 0;
    bad.e_p = 0;
    CHECK_THROWS_AS(bws(bad), std::invalid_argument);
    CHECK_THROWS_AS(bws_asymptote(0, 2, 0, 5), std::invalid_argument);
}

TEST_CASE("measured counters are recomputable from the traces")
{
    const auto run = small_run(40'000);
    const auto& r = run.report;
    std::uint64_t native = 0;
    for (const auto& p : run.natives) native += 40 + p.payload_len;
    std::uint64_t muxed = 0;
    for (const auto& b : run.mux.bundles) muxed += b.wire_size;
    CHECK(r.native_bytes == native);
    CHECK(r.muxed_bytes == muxed);
    CHECK(r.native_packets == run.natives.size());
    CHECK(r.bundles == run.mux.bundles.size());
    CHECK(r.measured_bws == doctest::Approx(1.0 - double(muxed) / double(native)));
    CHECK(r.measured_e_k == doctest::Approx(double(run.natives.size()) / double(run.mux.bundles.size())));
    CHECK(r.reconciliation_error <= 0.01);
    CHECK(r.dominant_gap_us == 40'000);
    CHECK(r.max_delay_ms <= 40.0);

    const auto again = measure_run(run.natives, bundle_rows(run.mux.bundles), delay_rows(run.mux.bundles), MuxConfig{40'000});
    CHECK(again.measured_bws == r.measured_bws);
}

TEST_CASE("one packet per bundle reproduces the E[k]=1 saving")
{
    const auto run = small_run(1, 1);
    const auto& r = run.report;
    CHECK(r.measured_e_k == doctest::Approx(1.0));
    SavingsInput in;
    in.e_k = 1;
    in.e_p = r.measured_e_p;
    in.e_rh = r.measured_e_rh;
    CHECK(std::abs(r.measured_bws - bws(in)) <= 1e-9);
    CHECK(std::abs(r.measured_e_rh - expected_reduced_header(wow_profile().fields, Direction::ClientToServer)) <= 0.2);
}

TEST_CASE("trace mismatch raises an integrity error")
{
    const auto run = small_run(40'000, 3);
    auto rows = bundle_rows(run.mux.bundles);
    rows.back().n_records += 1;
    CHECK_THROWS_AS(measure_run(run.natives, rows, delay_rows(run.mux.bundles), MuxConfig{40'000}), IntegrityError);
    auto delays = delay_rows(run.mux.bundles);
    delays.pop_back();
    CHECK_THROWS_AS(measure_run(run.natives, bundle_rows(run.mux.bundles), delays, MuxConfig{40'000}), IntegrityError);
}

TEST_CASE("sweep grid ordering, parallel agreement and monotone trends")
{
    SweepSpec spec;
    spec.profile = wow_profile();
    spec.players = {5, 20, 50};
    spec.periods_us = {10'000, 30'000, 60'000, 100'000};
    spec.packets_per_player = 2000;
    spec.seed = 3;
    const auto par = sweep(spec);
    const auto ser = sweep_serial(spec);
    REQUIRE(par.size() == 12);
    REQUIRE(ser.size() == 12);
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(par[i].n_players == spec.players[i / 4]);
        CHECK(par[i].period_us == spec.periods_us[i % 4]);
        CHECK(par[i].measured_bws == ser[i].measured_bws);
        CHECK(par[i].muxed_bytes == ser[i].muxed_bytes);
        CHECK(par[i].reconciliation_error <= 0.01);
    }
    const double noise = 0.01;
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t k = 1; k < 4; ++k) CHECK(par[p * 4 + k].measured_bws >= par[p * 4 + k - 1].measured_bws - noise);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t p = 1; p < 3; ++p) CHECK(par[p * 4 + k].measured_bws >= par[(p - 1) * 4 + k].measured_bws - noise);
    for (const auto& r : par) CHECK(r.measured_bws < bws_asymptote(40, 2, r.measured_e_p, r.measured_e_rh));
}
