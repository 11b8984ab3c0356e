#include "amsr/sparse_cnn.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace amsr;
using testutil::Rng;

namespace {

Tensor act_ref(const Tensor& t, const MaskedConvBlock& blk) {
    std::vector<float> v(t.values().begin(), t.values().end());
    const int hw = t.height() * t.width();
    for (int c = 0; c < t.channels(); ++c)
        for (int i = 0; i < hw; ++i) {
            float& x = v[static_cast<std::size_t>(c) * hw + i];
            if (blk.act == Activation::relu) x = x > 0.0f ? x : 0.0f;
            if (blk.act == Activation::prelu) x = x >= 0.0f ? x : blk.prelu_slope[c] * x;
        }
    return Tensor(t.channels(), t.height(), t.width(), std::move(v));
}

BitMask2D ones_mask(int h, int w) {
    BitMask2D m(h, w);
    for (auto& b : m.bits) b = 1;
    return m;
}

} // namespace

TEST_CASE("build_gather_plan enumerates mask bits row-major") {
    BitMask2D m(2, 2);
    m.at(0, 0) = 1;
    m.at(1, 1) = 1;
    GatherPlan p = build_gather_plan(m);
    CHECK(p.q == 2);
    REQUIRE(p.indices.size() == 2);
    CHECK(p.indices[0] == std::pair<int, int>{0, 0});
    CHECK(p.indices[1] == std::pair<int, int>{1, 1});

    CHECK(build_gather_plan(BitMask2D(3, 3)).q == 0);

    GatherPlan full = build_gather_plan(ones_mask(2, 3));
    CHECK(full.q == 6);
    CHECK(full.indices[3] == std::pair<int, int>{1, 0});
}

TEST_CASE("masked block: train and infer paths agree bit for bit") {
    Rng rng(101);
    for (int trial = 0; trial < 16; ++trial) {
        const int c = rng.uniform_int(1, 5);
        const int h = rng.uniform_int(2, 10);
        const int w = rng.uniform_int(2, 10);
        const auto act = static_cast<Activation>(rng.uniform_int(0, 2));
        MaskedConvBlock blk = testutil::random_block(rng, c, act);
        Tensor g = testutil::random_tensor(rng, c, h, w);
        BitMask2D m = testutil::random_mask(rng, h, w, rng.prob());

        Tensor train = block_forward_train(g, blk, m);
        Tensor infer = block_forward_infer(g, blk, m);
        CHECK(testutil::bit_equal(train, infer));
    }
}

TEST_CASE("masked block semantics") {
    Rng rng(103);
    const int c = 3, h = 6, w = 5;
    MaskedConvBlock blk = testutil::random_block(rng, c, Activation::relu);
    Tensor g = testutil::random_tensor(rng, c, h, w);

    SUBCASE("all-zero mask is a pass-through with zero work") {
        BitMask2D m(h, w);
        ExecStats st;
        Tensor y = block_forward_infer(g, blk, m, &st);
        CHECK(testutil::bit_equal(y, g));
        CHECK(st.gemm_macs == 0);
    }
    SUBCASE("all-ones mask equals activation of the dense convolution") {
        // Shared accumulation order with the unfold+gemm reference makes
        // this comparison exact.
        BitMask2D m = ones_mask(h, w);
        Tensor y = block_forward_infer(g, blk, m);
        Tensor dense = act_ref(gemm1x1(unfold3x3(g), blk.weights), blk);
        CHECK(testutil::bit_equal(y, dense));
    }
    SUBCASE("single-pixel mask changes only that pixel") {
        BitMask2D m(h, w);
        m.at(2, 3) = 1;
        Tensor y = block_forward_infer(g, blk, m);
        for (int ch = 0; ch < c; ++ch)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx)
                    if (yy != 2 || xx != 3) CHECK(y.at(ch, yy, xx) == g.at(ch, yy, xx));
    }
    SUBCASE("pruned neighbors contribute zero to gathered columns") {
        // A mask with one kept pixel: its column sees the original values of
        // ALL spatial neighbors zeroed out except itself, equivalently the
        // train path on a mask-zeroed input.
        BitMask2D m(h, w);
        m.at(0, 0) = 1;
        Tensor zeroed(c, h, w);
        for (int ch = 0; ch < c; ++ch) zeroed.at(ch, 0, 0) = g.at(ch, 0, 0);
        Tensor expect = act_ref(gemm1x1(unfold3x3(zeroed), blk.weights), blk);
        Tensor y = block_forward_infer(g, blk, m);
        for (int ch = 0; ch < c; ++ch) CHECK(y.at(ch, 0, 0) == expect.at(ch, 0, 0));
    }
    SUBCASE("gemm work is exactly q*9C*C") {
        BitMask2D m = testutil::random_mask(rng, h, w, 0.4);
        ExecStats st;
        block_forward_infer(g, blk, m, &st);
        CHECK(st.gemm_macs == m.popcount() * 9ull * c * c);
    }
    SUBCASE("dimension mismatches throw") {
        BitMask2D bad(h + 1, w);
        CHECK_THROWS_AS(block_forward_infer(g, blk, bad, nullptr), std::invalid_argument);
        MaskedConvBlock wrong = testutil::random_block(rng, c + 1, Activation::none);
        CHECK_THROWS_AS(block_forward_infer(g, wrong, ones_mask(h, w), nullptr),
                        std::invalid_argument);
    }
}

TEST_CASE("run_body_cnn composes blocks under one mask") {
    Rng rng(107);
    const int c = 4, h = 8, w = 8;
    std::vector<MaskedConvBlock> blocks;
    for (int i = 0; i < 3; ++i)
        blocks.push_back(testutil::random_block(rng, c, Activation::prelu));
    Tensor f = testutil::random_tensor(rng, c, h, w);
    BitMask2D m = testutil::random_mask(rng, h, w, 0.5);

    SUBCASE("no blocks is the identity") {
        CHECK(testutil::bit_equal(run_body_cnn(f, {}, m, RunMode::infer), f));
    }
    SUBCASE("train equals infer across the stack") {
        Tensor a = run_body_cnn(f, blocks, m, RunMode::train);
        Tensor b = run_body_cnn(f, blocks, m, RunMode::infer);
        CHECK(testutil::bit_equal(a, b));
    }
    SUBCASE("single block equals block_forward_infer") {
        std::vector<MaskedConvBlock> one = {blocks[0]};
        CHECK(testutil::bit_equal(run_body_cnn(f, one, m, RunMode::infer),
                                  block_forward_infer(f, blocks[0], m)));
    }
    SUBCASE("pruned pixels ride through the whole stack untouched") {
        Tensor y = run_body_cnn(f, blocks, m, RunMode::infer);
        for (int ch = 0; ch < c; ++ch)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx)
                    if (!m.at(yy, xx)) CHECK(y.at(ch, yy, xx) == f.at(ch, yy, xx));
    }
    SUBCASE("mask refinement: commonly pruned pixels agree") {
        BitMask2D coarse = m;
        BitMask2D fine = m;
        for (std::size_t i = 0; i < fine.bits.size(); i += 3) fine.bits[i] = 1;
        Tensor a = run_body_cnn(f, blocks, coarse, RunMode::infer);
        Tensor b = run_body_cnn(f, blocks, fine, RunMode::infer);
        for (int ch = 0; ch < c; ++ch)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx)
                    if (!coarse.at(yy, xx) && !fine.at(yy, xx))
                        CHECK(a.at(ch, yy, xx) == b.at(ch, yy, xx));
    }
    SUBCASE("work scales with blocks and mask population") {
        ExecStats st;
        run_body_cnn(f, blocks, m, RunMode::infer, &st);
        CHECK(st.gemm_macs == 3ull * m.popcount() * 9ull * c * c);
    }
}
