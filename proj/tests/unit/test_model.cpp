#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "seqlab/errors.hpp"
#include "seqlab/model.hpp"
#include "seqlab/prob.hpp"

using namespace seqlab;
using namespace seqlab::model;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.input_dim = 6;
    cfg.hidden_dims = {5, 4};
    cfg.num_classes = 3;
    cfg.init_seed = 7;
    cfg.init_scale = 1.0;
    return cfg;
}

std::vector<std::vector<double>> random_inputs(RngStream& rng, std::size_t n, int dim) {
    std::vector<std::vector<double>> xs(n);
    for (auto& x : xs) {
        x.resize(static_cast<std::size_t>(dim));
        for (auto& v : x) v = rng.next_unit();
    }
    return xs;
}

}  // namespace

TEST_CASE("init is deterministic and respects init_scale") {
    const auto cfg = small_config();
    CHECK(init(cfg).flatten() == init(cfg).flatten());

    ModelConfig zero = cfg;
    zero.init_scale = 0.0;
    for (double v : init(zero).flatten()) CHECK(v == 0.0);

    // Biases start at zero.
    const auto params = init(cfg);
    for (const auto& layer : params.layers)
        for (double b : layer.biases) CHECK(b == 0.0);
}

TEST_CASE("init spread scales with 1/sqrt(fan_in)") {
    ModelConfig narrow;
    narrow.input_dim = 8;
    narrow.hidden_dims = {};
    narrow.num_classes = 1300;
    narrow.init_seed = 3;
    ModelConfig wide = narrow;
    wide.input_dim = 32;

    auto mean_abs = [](const ParamSet& p) {
        double acc = 0.0;
        std::size_t n = 0;
        for (double v : p.layers[0].weights) {
            acc += std::abs(v);
            ++n;
        }
        return acc / static_cast<double>(n);
    };
    // E|w| = bound/2 with bound = scale/sqrt(fan_in), so the ratio is
    // sqrt(32/8) = 2 up to sampling error over ~10^4 draws.
    const double ratio = mean_abs(init(narrow)) / mean_abs(init(wide));
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("forward") {
    const auto cfg = small_config();
    const auto params = init(cfg);

    SUBCASE("zero parameters give zero logits and a uniform softmax") {
        ModelConfig zero = cfg;
        zero.init_scale = 0.0;
        const auto zero_params = init(zero);
        RngStream rng(1);
        const auto logits = forward(zero_params, random_inputs(rng, 3, cfg.input_dim));
        for (const auto& z : logits) {
            for (double v : z.values) CHECK(v == 0.0);
            for (double v : prob::softmax(z).p)
                CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        }
    }

    SUBCASE("a single linear layer with identity-like weights scales its input") {
        ModelConfig lin;
        lin.input_dim = 3;
        lin.num_classes = 3;
        lin.init_scale = 0.0;
        auto p = init(lin);
        for (int i = 0; i < 3; ++i)
            p.layers[0].weights[static_cast<std::size_t>(i * 3 + i)] = 2.0;
        const auto logits = forward(p, std::vector<std::vector<double>>{{0.1, 0.5, 0.9}});
        CHECK(logits[0].values[0] == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(logits[0].values[1] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(logits[0].values[2] == doctest::Approx(1.8).epsilon(1e-15));
    }

    SUBCASE("matches the straightforward second implementation to 1e-12") {
        RngStream rng(2);
        const auto xs = random_inputs(rng, 8, cfg.input_dim);
        const auto logits = forward(params, xs);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto naive = oracles::naive_forward(params, xs[i]);
            for (std::size_t k = 0; k < naive.size(); ++k)
                CHECK(logits[i].values[k] == doctest::Approx(naive[k]).epsilon(1e-12));
        }
    }

    SUBCASE("dimension mismatch raises") {
        CHECK_THROWS_AS(forward(params, std::vector<std::vector<double>>{{1.0, 2.0}}),
                        ParameterError);
    }

    SUBCASE("image ingestion divides by 255") {
        ModelConfig imgcfg;
        imgcfg.input_dim = 4;
        imgcfg.num_classes = 2;
        imgcfg.init_scale = 0.0;
        auto p = init(imgcfg);
        p.layers[0].weights[0] = 1.0;  // logit0 = pixel0 / 255
        Image img(2, 2, 1, 0);
        img.at(0, 0, 0) = 51;
        const auto logits = forward(p, std::vector<Image>{img});
        CHECK(logits[0].values[0] == doctest::Approx(0.2).epsilon(1e-15));
    }
}

TEST_CASE("backward") {
    const auto cfg = small_config();
    const auto params = init(cfg);
    RngStream rng(3);
    const auto xs = random_inputs(rng, 4, cfg.input_dim);

    SUBCASE("zero dlogits give zero gradients") {
        ForwardCache cache;
        forward(params, xs, &cache);
        std::vector<std::vector<double>> dz(xs.size(), std::vector<double>(3, 0.0));
        const auto grads = backward(params, cache, dz);
        for (double v : grads.flatten()) CHECK(v == 0.0);
    }

    SUBCASE("single layer weight gradient is the outer product dlogits x input") {
        ModelConfig lin;
        lin.input_dim = 2;
        lin.num_classes = 2;
        lin.init_seed = 5;
        const auto p = init(lin);
        ForwardCache cache;
        forward(p, std::vector<std::vector<double>>{{0.3, 0.7}}, &cache);
        const auto grads = backward(p, cache, {{2.0, -1.0}});
        CHECK(grads.layers[0].weights[0] == doctest::Approx(2.0 * 0.3).epsilon(1e-15));
        CHECK(grads.layers[0].weights[1] == doctest::Approx(2.0 * 0.7).epsilon(1e-15));
        CHECK(grads.layers[0].weights[2] == doctest::Approx(-1.0 * 0.3).epsilon(1e-15));
        CHECK(grads.layers[0].weights[3] == doctest::Approx(-1.0 * 0.7).epsilon(1e-15));
        CHECK(grads.layers[0].biases[0] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(grads.layers[0].biases[1] == doctest::Approx(-1.0).epsilon(1e-15));
    }

    SUBCASE("full network gradients match central finite differences") {
        // Cross-entropy of a fixed target against softmax(logits), checked
        // over 100 random (model, input) draws.
        RngStream meta(4);
        int done = 0;
        while (done < 100) {
            ModelConfig rc;
            rc.input_dim = 2 + static_cast<int>(meta.next_int(0, 3));
            rc.hidden_dims = {2 + static_cast<int>(meta.next_int(0, 3))};
            rc.num_classes = 2 + static_cast<int>(meta.next_int(0, 2));
            rc.init_seed = meta.next_u64();
            rc.init_scale = 1.0;
            auto p = init(rc);
            const auto x = random_inputs(meta, 2, rc.input_dim);
            const int target = static_cast<int>(meta.next_int(0, rc.num_classes - 1));

            // Skip draws with pre-activations near the ReLU kink; finite
            // differences are invalid across it.
            ForwardCache probe_cache;
            forward(p, x, &probe_cache);
            bool near_kink = false;
            for (const auto& per_sample : probe_cache.activations)
                for (const auto& acts : per_sample)
                    for (double a : acts)
                        if (a > 0.0 && a < 1e-4) near_kink = true;
            if (near_kink) continue;

            auto loss_at = [&](const std::vector<double>& flat) {
                ParamSet q = p;
                q.assign_flat(flat);
                const auto logits = forward(q, x);
                double acc = 0.0;
                for (const auto& z : logits) acc += prob::cross_entropy_hard(target, prob::softmax(z));
                return acc / static_cast<double>(logits.size());
            };

            ForwardCache cache;
            const auto logits = forward(p, x, &cache);
            std::vector<std::vector<double>> dz;
            for (const auto& z : logits) {
                auto probs = prob::softmax(z);
                auto g = probs.p;
                g[static_cast<std::size_t>(target)] -= 1.0;
                for (auto& v : g) v /= static_cast<double>(logits.size());
                dz.push_back(g);
            }
            const auto analytic = backward(p, cache, dz).flatten();
            const auto fd = oracles::fd_gradient(loss_at, p.flatten(), 1e-5);
            CHECK(oracles::max_rel_error(analytic, fd, 1e-6) < 1e-4);
            ++done;
        }
    }

    SUBCASE("mismatched cache is a programming error") {
        ForwardCache cache;
        forward(params, xs, &cache);
        ModelConfig other = cfg;
        other.hidden_dims = {9};
        const auto other_params = init(other);
        std::vector<std::vector<double>> dz(xs.size(), std::vector<double>(3, 0.0));
        CHECK_THROWS_AS(backward(other_params, cache, dz), std::logic_error);
        std::vector<std::vector<double>> bad_batch(xs.size() + 1, std::vector<double>(3, 0.0));
        CHECK_THROWS_AS(backward(params, cache, bad_batch), std::logic_error);
    }
}

TEST_CASE("flatten ordering is stable and assign_flat round-trips") {
    const auto cfg = small_config();
    auto params = init(cfg);
    const auto flat = params.flatten();
    CHECK(flat.size() == params.param_count());
    CHECK(flat.size() ==
          static_cast<std::size_t>(6 * 5 + 5 + 5 * 4 + 4 + 4 * 3 + 3));

    auto copy = init(cfg);
    copy.assign_flat(flat);
    CHECK(copy.flatten() == flat);

    std::vector<double> wrong(flat.size() + 1, 0.0);
    CHECK_THROWS_AS(params.assign_flat(wrong), ParameterError);
}

TEST_CASE("checkpoint round trip and corruption handling") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "seqlab_model_tests";
    fs::create_directories(dir);
    const auto cfg = small_config();
    const auto params = init(cfg);

    const auto path = dir / "ckpt_1.bin";
    save_checkpoint(cfg, params, path);
    const auto [loaded_cfg, loaded] = load_checkpoint(path);
    CHECK(loaded_cfg == cfg);
    CHECK(loaded.flatten() == params.flatten());

    // Truncated file.
    {
        std::ofstream out(dir / "trunc.bin", std::ios::binary);
        out << "SEQLABCK";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "trunc.bin"), DataError);
    // Wrong magic.
    {
        std::ofstream out(dir / "magic.bin", std::ios::binary);
        out << "NOTACKPTxxxxxxxxxxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "magic.bin"), DataError);
    CHECK_THROWS_AS(load_checkpoint(dir / "absent.bin"), DataError);
}
