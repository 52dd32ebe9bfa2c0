#include <doctest.h>

#include <thread>

#include "glassbox/edit.hpp"
#include "glassbox/errors.hpp"
#include "glassbox/model_json.hpp"
#include "glassbox/model_store.hpp"
#include "glassbox/scene_io.hpp"
#include "support.hpp"

using namespace glassbox;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const std::vector<std::string> kFeatures{"brightness", "cool_contrast", "infrared"};

EbmModel brightness_model() {
    EbmModel m;
    Term1D t;
    t.feature = "brightness";
    t.bins.edges = {10, 20, 24, 30, 40};
    t.scores = {0.4, -0.2, 0.9, 1.5, 2.0, 2.5};
    t.error_bars = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    t.edited_mask.assign(6, false);
    m.terms1d.push_back(t);
    Term1D c = t;
    c.feature = "cool_contrast";
    c.bins.edges = {0.25, 0.5, 0.75};
    c.scores = {-0.3, 0.1, 0.6, 1.2};
    c.error_bars = {0.05, 0.05, 0.05, 0.05};
    c.edited_mask.assign(4, false);
    m.terms1d.push_back(c);
    m.validate();
    return m;
}

EditOp op_of(EditKind kind, const std::string& term, std::optional<Interval> range = std::nullopt) {
    EditOp op;
    op.kind = kind;
    op.term = term;
    op.range = range;
    return op;
}

}  // namespace

TEST_CASE("flatten the left side to the range minimum") {
    auto m = brightness_model();
    auto e = apply_edit(m, op_of(EditKind::FlattenRange, "brightness", Interval{-kInf, 24.0}));
    const auto& t = e.terms1d[0];
    // (-inf,10], (10,20], (20,24] take the minimum -0.2; the rest are untouched.
    CHECK(t.scores == std::vector<double>{-0.2, -0.2, -0.2, 1.5, 2.0, 2.5});
    CHECK(t.edited_mask == std::vector<bool>{true, true, true, false, false, false});
    CHECK_FALSE(t.error_bars[0].has_value());
    CHECK_FALSE(t.error_bars[2].has_value());
    CHECK(t.error_bars[3] == 0.1);
    CHECK(e.version == m.version + 1);
    CHECK(e.parent_version == m.version);
    CHECK(e.edit_log.size() == 1);
    CHECK(m.terms1d[0].scores[0] == 0.4);  // input untouched

    auto d = diff(m, e);
    REQUIRE(d.size() == 1);
    CHECK(d[0].term_id == "brightness");
    CHECK(d[0].bins.size() == 2);  // bin 1 already held the minimum
}

TEST_CASE("ranges snap outward to whole bins") {
    auto m = brightness_model();
    auto bins = affected_bins(m, op_of(EditKind::Shift, "brightness", Interval{15.0, 21.0}));
    CHECK(bins == std::vector<std::size_t>{1, 2});
    bins = affected_bins(m, op_of(EditKind::Shift, "brightness", Interval{20.0, 20.0}));
    CHECK(bins == std::vector<std::size_t>{1});
    bins = affected_bins(m, op_of(EditKind::Shift, "brightness"));
    CHECK(bins.size() == 6);
}

TEST_CASE("scale by one still marks bins edited") {
    auto m = brightness_model();
    auto op = op_of(EditKind::Scale, "cool_contrast", Interval{0.3, 0.6});
    op.factor = 1.0;
    auto e = apply_edit(m, op);
    CHECK(e.terms1d[1].scores == m.terms1d[1].scores);
    CHECK(e.terms1d[1].edited_mask == std::vector<bool>{false, true, true, false});
    CHECK(diff(m, e).empty());
}

TEST_CASE("scale then shift matches re-application oracle") {
    auto m = brightness_model();
    auto scale = op_of(EditKind::Scale, "cool_contrast", Interval{0.2, kInf});
    scale.factor = 2.0;
    auto shift = op_of(EditKind::Shift, "cool_contrast");
    shift.delta = -0.5;
    const EditOp ops[] = {scale, shift};
    auto e = apply_edits(m, ops);
    const auto& before = m.terms1d[1].scores;
    const auto& after = e.terms1d[1].scores;
    for (std::size_t b = 0; b < before.size(); ++b) {
        CHECK(after[b] == before[b] * 2.0 - 0.5);
    }
    CHECK(e.version == m.version + 2);
    CHECK(replay(m, e) == e);
}

TEST_CASE("set_value and explicit flatten value") {
    auto m = brightness_model();
    auto set = op_of(EditKind::SetValue, "brightness", Interval{35.0, kInf});
    set.value = -1.0;
    auto e = apply_edit(m, set);
    CHECK(e.terms1d[0].scores[4] == -1.0);
    CHECK(e.terms1d[0].scores[5] == -1.0);
    auto flat = op_of(EditKind::FlattenRange, "brightness", Interval{0.0, 15.0});
    flat.value = 0.0;
    auto f = apply_edit(m, flat);
    CHECK(f.terms1d[0].scores[0] == 0.0);
    CHECK(f.terms1d[0].scores[1] == 0.0);
}

TEST_CASE("edit errors") {
    auto m = brightness_model();
    CHECK_THROWS_AS(apply_edit(m, op_of(EditKind::Shift, "nope")), NotFoundError);
    auto bad = op_of(EditKind::SetValue, "brightness");
    CHECK_THROWS_AS(apply_edit(m, bad), ValidationError);
    auto y = op_of(EditKind::Shift, "brightness");
    y.range_y = Interval{0, 1};
    CHECK_THROWS_AS(apply_edit(m, y), ValidationError);
    CHECK(apply_edits(m, {}) == m);
}

TEST_CASE("pair term edits use both ranges") {
    Rng rng(30);
    auto m = testing::random_model(rng, kFeatures);
    const auto& t = m.terms2d[0];
    auto op = op_of(EditKind::Shift, pair_term_id(t.feature_x, t.feature_y), Interval{-kInf, t.bins_x.edges[0]});
    op.range_y = Interval{t.bins_y.edges.back() + 1.0, kInf};
    op.delta = 1.0;
    auto e = apply_edit(m, op);
    const auto ny = t.bins_y.bin_count();
    for (std::size_t k = 0; k < t.scores.size(); ++k) {
        const bool hit = k / ny == 0 && k % ny == ny - 1;
        CHECK(e.terms2d[0].edited_mask[k] == hit);
        CHECK(e.terms2d[0].scores[k] == (hit ? t.scores[k] + 1.0 : t.scores[k]));
    }
}

TEST_CASE("diff identical models and structural mismatch") {
    Rng rng(31);
    auto a = testing::random_model(rng, kFeatures);
    CHECK(diff(a, a).empty());
    auto b = a;
    b.terms1d[0].bins.edges[0] -= 1e-3;
    CHECK_THROWS_AS(diff(a, b), ValidationError);
    auto c = a;
    c.terms2d.pop_back();
    CHECK_THROWS_AS(diff(a, c), ValidationError);
}

TEST_CASE("edit locality on random models") {
    Rng rng(32);
    for (int k = 0; k < 50; ++k) {
        auto m = testing::random_model(rng, kFeatures);
        const auto ids = m.term_ids();
        auto op = op_of(EditKind::Shift, ids[rng.below(ids.size())]);
        double lo = rng.uniform(-4, 4), hi = rng.uniform(-4, 4);
        op.range = Interval{std::min(lo, hi), std::max(lo, hi)};
        op.delta = rng.uniform(-1, 1);
        EbmModel e;
        try {
            e = apply_edit(m, op);
        } catch (const ValidationError&) {
            continue;
        }
        for (int s = 0; s < 50; ++s) {
            FeatureVector x;
            for (const auto& f : kFeatures) x[f] = rng.uniform(-4, 4);
            const auto da = decompose(m, x);
            const auto db = decompose(e, x);
            const auto idx = *m.find_term(op.term);
            if (da.terms[idx].score == db.terms[idx].score) {
                REQUIRE(predict_proba(m, x) == predict_proba(e, x));
            } else {
                REQUIRE(std::abs((db.total() - da.total()) - op.delta) < 1e-9);
            }
        }
    }
}

TEST_CASE("model store versions, conflicts and persistence") {
    testing::TempDir dir("store");
    auto base = brightness_model();
    ModelStore store(base);
    store.persist_to(dir.path);
    CHECK(store.head() == 1);

    auto shift = op_of(EditKind::Shift, "brightness", Interval{30.0, kInf});
    shift.delta = 0.5;
    auto scale = op_of(EditKind::Scale, "cool_contrast");
    scale.factor = 3.0;
    const EditOp ops[] = {shift, scale};
    auto head = store.apply(1, ops);
    CHECK(head.version == 3);
    CHECK(store.head() == 3);
    CHECK(store.versions() == std::vector<std::int64_t>{1, 2, 3});
    CHECK(store.get(1) == base);  // never mutated

    CHECK_THROWS_AS(store.apply(1, ops), ConflictError);
    CHECK_THROWS_AS(store.apply(99, ops), NotFoundError);
    CHECK_THROWS_AS(store.apply(3, std::span<const EditOp>{}), ValidationError);
    auto bad = op_of(EditKind::Shift, "missing");
    CHECK_THROWS_AS(store.apply(3, std::span<const EditOp>(&bad, 1)), NotFoundError);
    CHECK(store.head() == 3);  // failed batch commits nothing
    CHECK_THROWS_AS(store.get(17), NotFoundError);

    // revert returns the exact stored model; replay reproduces the head.
    auto v1 = revert(store, 1);
    CHECK(v1 == base);
    CHECK(revert(store, 3) == store.get(3));
    CHECK(replay(v1, store.get(3)) == store.get(3));
    for (const auto& d : diff(v1, store.get(3))) {
        const auto idx = *v1.find_term(d.term_id);
        for (const auto& b : d.bins) CHECK(store.get(3).terms1d[idx].edited_mask[b.bin]);
    }

    ModelStore reloaded(dir.path);
    CHECK(reloaded.versions() == store.versions());
    CHECK(reloaded.get(3) == store.get(3));
    CHECK(read_text_file(ModelStore::version_path(dir.path, 2)) == serialize(store.get(2)));
}

TEST_CASE("model store serializes concurrent writers") {
    ModelStore store(brightness_model());
    auto op = op_of(EditKind::Shift, "brightness");
    op.delta = 0.01;
    std::atomic<int> ok{0}, conflicts{0};
    {
        std::vector<std::jthread> threads;
        for (int t = 0; t < 8; ++t) {
            threads.emplace_back([&] {
                for (int k = 0; k < 20; ++k) {
                    try {
                        store.apply(store.head(), std::span<const EditOp>(&op, 1));
                        ++ok;
                    } catch (const ConflictError&) {
                        ++conflicts;
                    }
                }
            });
        }
    }
    CHECK(ok + conflicts == 160);
    CHECK(store.head() == 1 + ok);
    CHECK(store.versions().size() == static_cast<std::size_t>(1 + ok));
}
