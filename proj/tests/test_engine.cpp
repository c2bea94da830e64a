#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <kgtruth/kgtruth.hpp>

using namespace kgtruth;

namespace {

// one triple, two conflicting gender conditions, one reference source;
// external embedding x = [2], so every case context is exactly 2
const char* kPairJsonl =
    R"({"source_id":"emr","is_reference":true,"triples":[{"head":"metformin","relation":"treats","tail":"t2d"}],"conditions":[{"type":"gender","value":"male"}]})"
    "\n"
    R"({"source_id":"web","triples":[{"head":"metformin","relation":"treats","tail":"t2d"}],"conditions":[{"type":"gender","value":"female"}]})"
    "\n";

struct Pair {
    Dataset ds;
    IndexView ix;
    EmbeddingSet emb;
    HyperParams hp;
};

Pair make_pair() {
    Pair p;
    std::istringstream in(kPairJsonl);
    p.ds = ingest_cases(in);
    p.ix = build_index(p.ds);
    RowMatrixXd x(1, 1);
    x << 2.0;
    p.emb = make_external_embeddings(x);
    p.hp.lambda = 0.5;
    p.hp.mu = 0.2;
    return p;
}

SyntheticData small_instance(std::uint64_t seed) {
    ScenarioSpec sc;
    sc.n_objects = 8;
    sc.n_claims = 4;
    sc.n_sources = 6;
    sc.n_reference = 2;
    sc.ref_noise = 0.1;
    sc.nonref_noise = 0.6;
    sc.objects_per_case = 2;
    sc.seed = seed;
    return gen_single_truth(sc);
}

EmbeddingSet embeddings_for(const Dataset& ds, std::uint64_t seed) {
    if (seed % 2 == 0) return make_one_hot_embeddings(ds.triple_count());
    Rng rng(derive_seed(seed, 0xE3Bu));
    RowMatrixXd x(ds.triple_count(), 3);
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) x(i, j) = rng.gaussian();
    return make_external_embeddings(x);
}

HyperParams params_for(std::uint64_t seed) {
    HyperParams hp;
    const double lambdas[] = {0.0, 0.5, 1.3};
    const double mus[] = {0.0, 0.1, 0.7};
    hp.lambda = lambdas[seed % 3];
    hp.mu = mus[(seed / 3) % 3];
    return hp;
}

// independent accumulation of the weighted objective, kept deliberately
// naive: raw softmax attention, no grouping, no reuse of solver internals
double reference_objective(const Dataset& ds, const IndexView& ix,
                           const EmbeddingSet& emb, const HyperParams& hp,
                           const RowMatrixXd& v, const RowMatrixXd& u,
                           const Eigen::VectorXd& omega) {
    double obj = 0.0;
    for (const Case& c : ds.cases) {
        const int s = static_cast<int>(c.triples.size());
        for (int p = 0; p < s; ++p) {
            const TripleId m = c.triples[p];
            std::vector<double> alpha(s);
            double z = 0.0;
            for (int i = 0; i < s; ++i) {
                alpha[i] = std::exp(emb.x.row(c.triples[i]).dot(emb.x.row(m)));
                z += alpha[i];
            }
            double context_pen = 0.0;
            for (int i = 0; i < s; ++i)
                context_pen += alpha[i] / z *
                               (v.row(m) - emb.x.row(c.triples[i])).squaredNorm();
            for (ConditionId n : c.conditions) {
                const SourceId k = c.source;
                const bool in_ref =
                    ix.references_used &&
                    std::binary_search(ds.reference_assertions.begin(),
                                       ds.reference_assertions.end(),
                                       std::make_pair(m, n));
                const double w =
                    omega(k) * (in_ref ? 1.0 + hp.lambda : 1.0) /
                    (ix.f_size[k] + hp.lambda * ix.delta_size[k]);
                obj += w * ((v.row(m) - u.row(n)).squaredNorm() +
                            hp.mu * context_pen);
            }
        }
    }
    return obj;
}

}  // namespace

TEST_CASE("pair instance: workspace weights and initialization") {
    const Pair p = make_pair();
    const SolveWorkspace ws = build_workspace(p.ds, p.ix, p.emb, p.hp);

    CHECK(ws.denom(0) == 1.5);  // |F| + lambda |overlap| = 1 + 0.5
    CHECK(ws.denom(1) == 1.0);
    CHECK(ws.occ_base[0] == 1.0);  // (1 + lambda) / 1.5
    CHECK(ws.occ_base[1] == 1.0);
    CHECK(ws.contexts(0, 0) == 2.0);
    CHECK(ws.context_sq(0) == 4.0);

    const Eigen::VectorXd w0 = init_source_weights(p.ds, p.ix, p.hp);
    CHECK(w0(0) == Catch::Approx(0.5 + 1e-8).margin(1e-15));
    CHECK(w0(1) == Catch::Approx(1e-8).margin(1e-15));

    const RowMatrixXd v0 = init_truth_vectors(ws, w0);
    CHECK(v0(0, 0) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("pair instance: frozen objective and closed-form steps") {
    const Pair p = make_pair();
    const SolveWorkspace ws = build_workspace(p.ds, p.ix, p.emb, p.hp);

    RowMatrixXd v(1, 1), u(2, 1);
    v << 0.5;
    u << 0.2, 0.9;
    Eigen::VectorXd omega(2);
    omega << 0.7, 0.3;

    CHECK(objective(ws, v, u, omega) == Catch::Approx(0.561).margin(1e-12));

    const Eigen::VectorXd theta = compute_source_errors(ws, v, u);
    CHECK(theta(0) == Catch::Approx(0.54 + 1e-8).margin(1e-12));
    CHECK(theta(1) == Catch::Approx(0.61 + 1e-8).margin(1e-12));
    const Eigen::VectorXd raw = (theta.array() - 1e-8).matrix();
    CHECK(objective(ws, v, u, omega) ==
          Catch::Approx(omega.dot(raw)).margin(1e-12));

    update_truth_vectors(ws, v, u, omega);
    CHECK(v(0, 0) == Catch::Approx(0.675).margin(1e-12));

    update_condition_vectors(ws, u, v, omega);
    CHECK(u(0, 0) == Catch::Approx(0.675).margin(1e-12));
    CHECK(u(1, 0) == Catch::Approx(0.675).margin(1e-12));
}

TEST_CASE("reliability update matches its closed form") {
    Eigen::VectorXd theta(2);
    theta << 1.0, 3.0;
    const Eigen::VectorXd w = update_source_weights(theta);
    CHECK(w(0) == Catch::Approx(1.3862943611198906).margin(1e-12));
    CHECK(w(1) == Catch::Approx(0.2876820724517809).margin(1e-12));
    CHECK(std::abs((-w.array()).exp().sum() - 1.0) < 1e-12);

    Eigen::VectorXd equal = Eigen::VectorXd::Ones(4);
    const Eigen::VectorXd we = update_source_weights(equal);
    for (int k = 0; k < 4; ++k)
        CHECK(we(k) == Catch::Approx(1.3862943611198906).margin(1e-12));

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(update_source_weights(zero), NumericalError);
}

TEST_CASE("pair instance: full solve reaches its fixed point") {
    const Pair p = make_pair();
    const SolverState st = solve(p.ds, p.emb, p.hp);

    CHECK(st.converged);
    CHECK(st.iterations <= 3);
    CHECK(st.v(0, 0) == Catch::Approx(2.0).margin(1e-9));
    CHECK(st.u(0, 0) == Catch::Approx(2.0).margin(1e-9));
    CHECK(st.u(1, 0) == Catch::Approx(2.0).margin(1e-9));
    CHECK(st.omega(0) == Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK(st.omega(1) == Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK(st.warnings.empty());

    for (size_t i = 1; i < st.objective_trace.size(); ++i)
        CHECK(st.objective_trace[i] <= st.objective_trace[i - 1] + 1e-9);
    for (double r : st.constraint_residual) CHECK(r <= 1e-12);
}

TEST_CASE("objective matches an independent accumulation") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SyntheticData sd = small_instance(seed);
        const EmbeddingSet emb = embeddings_for(sd.data, seed);
        const HyperParams hp = params_for(seed);
        const IndexView ix = build_index(sd.data, hp.use_references);
        const SolveWorkspace ws = build_workspace(sd.data, ix, emb, hp);

        Rng rng(derive_seed(seed, 0x0B1u));
        RowMatrixXd v(sd.data.triple_count(), emb.dim());
        RowMatrixXd u(sd.data.condition_count(), emb.dim());
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) v(i, j) = rng.gaussian();
        for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < u.cols(); ++j) u(i, j) = rng.gaussian();
        Eigen::VectorXd omega(sd.data.source_count());
        for (int k = 0; k < omega.size(); ++k) omega(k) = 0.1 + rng.uniform();

        const double fast = objective(ws, v, u, omega);
        const double slow =
            reference_objective(sd.data, ix, emb, hp, v, u, omega);
        CHECK(fast == Catch::Approx(slow).epsilon(1e-9));

        const Eigen::VectorXd theta = compute_source_errors(ws, v, u);
        const Eigen::VectorXd raw = (theta.array() - hp.epsilon).matrix();
        CHECK(fast == Catch::Approx(omega.dot(raw)).epsilon(1e-12));
    }
}

TEST_CASE("objective trace is monotone and the constraint holds") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const SyntheticData sd = small_instance(seed);
        const EmbeddingSet emb = embeddings_for(sd.data, seed);
        const SolverState st = solve(sd.data, emb, params_for(seed));

        REQUIRE_FALSE(st.objective_trace.empty());
        for (size_t i = 1; i < st.objective_trace.size(); ++i)
            CHECK(st.objective_trace[i] <= st.objective_trace[i - 1] + 1e-9);
        for (double r : st.constraint_residual) CHECK(r <= 1e-12);
    }
}

TEST_CASE("each closed-form step can only lower the objective") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const SyntheticData sd = small_instance(seed);
        const EmbeddingSet emb = embeddings_for(sd.data, seed);
        const HyperParams hp = params_for(seed);
        const IndexView ix = build_index(sd.data, hp.use_references);
        const SolveWorkspace ws = build_workspace(sd.data, ix, emb, hp);

        Eigen::VectorXd omega = init_source_weights(sd.data, ix, hp);
        RowMatrixXd v = init_truth_vectors(ws, omega);
        RowMatrixXd u = RowMatrixXd::Zero(sd.data.condition_count(), emb.dim());
        update_condition_vectors(ws, u, v, omega);

        for (int it = 0; it < 4; ++it) {
            double before = objective(ws, v, u, omega);
            update_truth_vectors(ws, v, u, omega);
            double after = objective(ws, v, u, omega);
            CHECK(after <= before + 1e-9);

            before = after;
            update_condition_vectors(ws, u, v, omega);
            after = objective(ws, v, u, omega);
            CHECK(after <= before + 1e-9);

            const Eigen::VectorXd theta = compute_source_errors(ws, v, u);
            // the reliability step minimizes over omega subject to its
            // constraint, so compare through the same linear form
            const Eigen::VectorXd next = update_source_weights(theta);
            const bool was_feasible =
                std::abs((-omega.array()).exp().sum() - 1.0) <= 1e-9;
            if (was_feasible) CHECK(next.dot(theta) <= omega.dot(theta) + 1e-9);
            omega = next;
        }
    }
}

TEST_CASE("finite differences vanish at every closed-form minimizer") {
    const double h = 1e-5;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SyntheticData sd = small_instance(seed);
        const EmbeddingSet emb = embeddings_for(sd.data, seed);
        const HyperParams hp = params_for(seed);
        const IndexView ix = build_index(sd.data, hp.use_references);
        const SolveWorkspace ws = build_workspace(sd.data, ix, emb, hp);

        Eigen::VectorXd omega = init_source_weights(sd.data, ix, hp);
        RowMatrixXd v = init_truth_vectors(ws, omega);
        RowMatrixXd u = RowMatrixXd::Zero(sd.data.condition_count(), emb.dim());
        update_condition_vectors(ws, u, v, omega);
        update_truth_vectors(ws, v, u, omega);
        omega = update_source_weights(compute_source_errors(ws, v, u));
        update_truth_vectors(ws, v, u, omega);

        double grad_sq = 0.0;
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) {
                RowMatrixXd vp = v, vm = v;
                vp(i, j) += h;
                vm(i, j) -= h;
                const double g = (objective(ws, vp, u, omega) -
                                  objective(ws, vm, u, omega)) /
                                 (2.0 * h);
                grad_sq += g * g;
            }
        CHECK(std::sqrt(grad_sq) < 1e-6);

        update_condition_vectors(ws, u, v, omega);
        grad_sq = 0.0;
        for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < u.cols(); ++j) {
                // conditions nobody asserted stay wherever they were put and
                // carry no objective mass; skip them
                if (ws.ix->occ_of_condition[i].empty()) continue;
                RowMatrixXd up = u, um = u;
                up(i, j) += h;
                um(i, j) -= h;
                const double g = (objective(ws, v, up, omega) -
                                  objective(ws, v, um, omega)) /
                                 (2.0 * h);
                grad_sq += g * g;
            }
        CHECK(std::sqrt(grad_sq) < 1e-6);

        // reliability step: finite differences along feasible directions of
        // the constraint surface sum exp(-w) = 1, one per source pair
        const Eigen::VectorXd theta = compute_source_errors(ws, v, u);
        omega = update_source_weights(theta);
        grad_sq = 0.0;
        const int K = static_cast<int>(omega.size());
        for (int i = 0; i + 1 < K; ++i) {
            const int j = i + 1;
            const double ai = std::exp(-omega(i));
            const double aj = std::exp(-omega(j));
            const double t = 1e-4 * std::min(ai, aj);
            Eigen::VectorXd wp = omega, wm = omega;
            wp(i) = -std::log(ai - t);
            wp(j) = -std::log(aj + t);
            wm(i) = -std::log(ai + t);
            wm(j) = -std::log(aj - t);
            const double g =
                (theta.dot(wp) - theta.dot(wm)) / (2.0 * t);
            grad_sq += g * g;
        }
        CHECK(std::sqrt(grad_sq) < 1e-6);
    }
}

TEST_CASE("triples seen only as context keep their embedding row") {
    std::istringstream in(
        R"({"source_id":"emr","is_reference":true,"triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"t","value":"v"}]})"
        "\n"
        R"({"source_id":"emr","is_reference":true,"triples":[{"head":"c","relation":"r","tail":"d"}]})"
        "\n");
    const Dataset ds = ingest_cases(in);
    RowMatrixXd x(2, 2);
    x << 1.0, 0.0, 3.0, -4.0;
    const SolverState st = solve(ds, make_external_embeddings(x), {});
    CHECK(st.v(1, 0) == 3.0);
    CHECK(st.v(1, 1) == -4.0);
    CHECK(st.v.allFinite());
}

TEST_CASE("a single source ends at weight zero") {
    std::istringstream in(
        R"({"source_id":"emr","is_reference":true,"triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"t","value":"v"}]})"
        "\n");
    const Dataset ds = ingest_cases(in);
    const SolverState st = solve(ds, make_one_hot_embeddings(1), {});
    CHECK(st.converged);
    CHECK(st.omega(0) == 0.0);
}

TEST_CASE("solving without references ignores the flags bitwise") {
    std::istringstream flagged_in(kPairJsonl);
    const Dataset flagged = ingest_cases(flagged_in);

    // the same corpus with its reference marks stripped
    std::string stripped_text(kPairJsonl);
    const std::string needle = "\"is_reference\":true,";
    const size_t at = stripped_text.find(needle);
    stripped_text.erase(at, needle.size());
    std::istringstream stripped_in(stripped_text);
    IngestOptions opts;
    opts.allow_no_reference = true;
    const Dataset stripped = ingest_cases(stripped_in, opts);

    RowMatrixXd x(1, 1);
    x << 2.0;
    HyperParams hp;
    hp.lambda = 0.0;
    hp.use_references = false;
    const SolverState a = solve(flagged, make_external_embeddings(x), hp);
    const SolverState b = solve(stripped, make_external_embeddings(x), hp);

    CHECK(a.v == b.v);
    CHECK(a.u == b.u);
    CHECK(a.omega == b.omega);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("asking for supervision without references warns") {
    std::istringstream in(
        R"({"source_id":"s","triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"t","value":"v"}]})"
        "\n");
    IngestOptions opts;
    opts.allow_no_reference = true;
    const Dataset ds = ingest_cases(in, opts);
    const SolverState st = solve(ds, make_one_hot_embeddings(1), {});
    REQUIRE_FALSE(st.warnings.empty());
    CHECK_THAT(st.warnings.front(),
               Catch::Matchers::ContainsSubstring("reference"));
}

TEST_CASE("rescaling embeddings rescales errors quadratically") {
    // single-triple cases keep the attention trivial, so the whole solve is
    // covariant: vectors scale linearly, errors quadratically
    ScenarioSpec sc;
    sc.n_objects = 8;
    sc.n_claims = 4;
    sc.n_sources = 6;
    sc.n_reference = 2;
    sc.ref_noise = 0.1;
    sc.nonref_noise = 0.6;
    sc.seed = 3;
    const SyntheticData sd = gen_single_truth(sc);

    RowMatrixXd x(sd.data.triple_count(), 2);
    Rng rng(derive_seed(3, 0x5CA1Eu));
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) x(i, j) = 2.0 + rng.uniform();

    HyperParams hp;
    hp.mu = 0.3;
    const SolverState base = solve(sd.data, make_external_embeddings(x), hp);
    const SolverState scaled =
        solve(sd.data, make_external_embeddings(4.0 * x), hp);

    CHECK(((scaled.v - 4.0 * base.v).norm() / base.v.norm()) < 1e-6);
    CHECK(((scaled.u - 4.0 * base.u).norm() / base.u.norm()) < 1e-6);
    CHECK((scaled.omega - base.omega).norm() < 1e-6);
    const Eigen::VectorXd err_ratio =
        (scaled.theta.array() - hp.epsilon) / (base.theta.array() - hp.epsilon);
    for (int k = 0; k < err_ratio.size(); ++k)
        CHECK(err_ratio(k) == Catch::Approx(16.0).epsilon(1e-6));

    const IndexView ix = build_index(sd.data);
    for (TripleId m = 0; m < sd.data.triple_count(); ++m)
        CHECK(select_truth(base, sd.data, ix, m) ==
              select_truth(scaled, sd.data, ix, m));
}

TEST_CASE("rescaling embeddings keeps every selection and ordering") {
    // multi-triple cases: attention weights change under scaling, but their
    // ordering does not, and neither do distance-based argmins at a
    // correspondingly scaled state
    const SyntheticData sd = small_instance(5);
    const IndexView ix = build_index(sd.data);
    Rng rng(derive_seed(5, 0x5CA1Eu));
    RowMatrixXd x(sd.data.triple_count(), 3);
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) x(i, j) = rng.gaussian();

    HyperParams hp;
    hp.mu = 0.0;  // pure squared-distance errors
    const EmbeddingSet emb = make_external_embeddings(x);
    const EmbeddingSet emb4 = make_external_embeddings(4.0 * x);
    const SolveWorkspace ws = build_workspace(sd.data, ix, emb, hp);
    const SolveWorkspace ws4 = build_workspace(sd.data, ix, emb4, hp);

    RowMatrixXd v(sd.data.triple_count(), 3), u(sd.data.condition_count(), 3);
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < 3; ++j) v(i, j) = rng.gaussian();
    for (int i = 0; i < u.rows(); ++i)
        for (int j = 0; j < 3; ++j) u(i, j) = rng.gaussian();

    const Eigen::VectorXd t1 = compute_source_errors(ws, v, u);
    const Eigen::VectorXd t4 =
        compute_source_errors(ws4, (4.0 * v).eval(), (4.0 * u).eval());
    for (int k = 0; k < t1.size(); ++k)
        CHECK((t4(k) - hp.epsilon) ==
              Catch::Approx(16.0 * (t1(k) - hp.epsilon)).epsilon(1e-9));

    SolverState st, st4;
    st.v = v;
    st.u = u;
    st4.v = 4.0 * v;
    st4.u = 4.0 * u;
    for (TripleId m = 0; m < sd.data.triple_count(); ++m) {
        CHECK(select_truth(st, sd.data, ix, m) ==
              select_truth(st4, sd.data, ix, m));
        CHECK(rank_conditions(st, sd.data, m, 0) ==
              rank_conditions(st4, sd.data, m, 0));
    }

    // attention ordering is preserved even though the weights are not
    Eigen::VectorXd target(3);
    target << 0.3, -0.2, 0.9;
    RowMatrixXd context(3, 3);
    context << 1.0, 0.0, 0.1, 0.2, 0.4, 0.8, -0.3, 0.5, 0.2;
    const Eigen::VectorXd a1 = attention_weights(target, context);
    const Eigen::VectorXd a4 =
        attention_weights((4.0 * target).eval(), (4.0 * context).eval());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK((a1(i) < a1(j)) == (a4(i) < a4(j)));
}

TEST_CASE("the solver is deterministic") {
    const SyntheticData sd = small_instance(7);
    const EmbeddingSet emb = embeddings_for(sd.data, 7);
    const HyperParams hp = params_for(7);
    const SolverState a = solve(sd.data, emb, hp);
    const SolverState b = solve(sd.data, emb, hp);
    CHECK(a.v == b.v);
    CHECK(a.u == b.u);
    CHECK(a.omega == b.omega);
    CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("reordering input cases does not change the discovered graph") {
    const std::vector<std::string> lines = {
        R"({"source_id":"emr","is_reference":true,"triples":[{"head":"a","relation":"r","tail":"b"},{"head":"c","relation":"r","tail":"d"}],"conditions":[{"type":"g","value":"male"}]})",
        R"({"source_id":"w1","triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"g","value":"female"}]})",
        R"({"source_id":"w2","triples":[{"head":"a","relation":"r","tail":"b"},{"head":"c","relation":"r","tail":"d"}],"conditions":[{"type":"g","value":"male"}]})",
        R"({"source_id":"w3","triples":[{"head":"c","relation":"r","tail":"d"}],"conditions":[{"type":"g","value":"female"}]})",
    };
    std::string forward, reversed;
    for (const std::string& l : lines) forward += l + "\n";
    for (auto it = lines.rbegin(); it != lines.rend(); ++it)
        reversed += *it + "\n";

    std::istringstream fwd_in(forward), rev_in(reversed);
    const Dataset fwd = ingest_cases(fwd_in);
    const Dataset rev = ingest_cases(rev_in);

    auto kg_by_name = [](const Dataset& ds) {
        HyperParams hp;
        hp.lambda = 0.5;
        hp.mu = 0.2;
        const SolverState st =
            solve(ds, make_one_hot_embeddings(ds.triple_count()), hp);
        const ConditionalKG kg = confidence_scores(st, ds, hp.epsilon);
        std::map<std::string, double> out;
        for (const KgEntry& e : kg.entries) {
            const auto& t = ds.triples[e.triple];
            const auto& c = ds.conditions[e.condition];
            out[t.head + "|" + t.relation + "|" + t.tail + "|" + c.type + "|" +
                c.value] = e.confidence;
        }
        return out;
    };

    const auto a = kg_by_name(fwd);
    const auto b = kg_by_name(rev);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == 4);
    bool nontrivial = false;
    for (const auto& [key, conf] : a) {
        REQUIRE(b.count(key) == 1);
        CHECK(b.at(key) == Catch::Approx(conf).margin(1e-9));
        if (conf < 1.0) nontrivial = true;
    }
    CHECK(nontrivial);
}

TEST_CASE("confidences top out at exactly one per triple and type") {
    for (std::uint64_t seed : {2ull, 9ull}) {
        const SyntheticData sd = small_instance(seed);
        const EmbeddingSet emb = embeddings_for(sd.data, seed);
        const HyperParams hp = params_for(seed);
        const SolverState st = solve(sd.data, emb, hp);
        const IndexView ix = build_index(sd.data, hp.use_references);
        const ConditionalKG kg = confidence_scores(st, sd.data, ix, hp.epsilon);

        REQUIRE_FALSE(kg.entries.empty());
        std::map<std::pair<TripleId, int>, double> best;
        for (const KgEntry& e : kg.entries) {
            CHECK(e.confidence > 0.0);
            CHECK(e.confidence <= 1.0);
            auto key =
                std::make_pair(e.triple, sd.data.condition_type_of[e.condition]);
            auto [it, ins] = best.emplace(key, e.confidence);
            if (!ins) it->second = std::max(it->second, e.confidence);
        }
        for (const auto& [key, mx] : best) CHECK(mx == 1.0);
    }
}

TEST_CASE("exact distance ties resolve to the lowest condition id") {
    // two symmetric unsupervised sources disagree; everything collapses to
    // one point, so both conditions are equidistant
    std::istringstream in(
        R"({"source_id":"s1","triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"g","value":"x"}]})"
        "\n"
        R"({"source_id":"s2","triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"g","value":"y"}]})"
        "\n");
    IngestOptions opts;
    opts.allow_no_reference = true;
    const Dataset ds = ingest_cases(in, opts);
    HyperParams hp;
    hp.use_references = false;
    const SolverState st = solve(ds, make_one_hot_embeddings(1), hp);
    const IndexView ix = build_index(ds, false);

    const auto sel = select_truth(st, ds, ix, 0);
    REQUIRE(sel.size() == 1);
    CHECK(sel[0].first == 0);
    CHECK(sel[0].second == 0);
    CHECK(rank_conditions(st, ds, 0, 0) == std::vector<ConditionId>{0, 1});
}

TEST_CASE("per-type solving keeps types independent") {
    std::istringstream in(
        R"({"source_id":"emr","is_reference":true,"triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"gender","value":"male"},{"type":"age","value":"30"}]})"
        "\n"
        R"({"source_id":"web","triples":[{"head":"a","relation":"r","tail":"b"}],"conditions":[{"type":"gender","value":"female"},{"type":"age","value":"70"}]})"
        "\n");
    const Dataset ds = ingest_cases(in);
    const EmbeddingSet emb = make_one_hot_embeddings(ds.triple_count());

    const PerTypeSolveResult res = solve_per_type(ds, emb, {});
    REQUIRE(res.runs.size() == 2);
    CHECK(res.runs[0].data.condition_count() == ds.condition_count());
    CHECK(res.mean_weights.size() == 2);
    CHECK(res.kg.entries.size() == 4);

    std::map<std::pair<TripleId, int>, double> best;
    for (const KgEntry& e : res.kg.entries) {
        auto key = std::make_pair(e.triple, ds.condition_type_of[e.condition]);
        auto [it, ins] = best.emplace(key, e.confidence);
        if (!ins) it->second = std::max(it->second, e.confidence);
    }
    REQUIRE(best.size() == 2);
    for (const auto& [key, mx] : best) CHECK(mx == 1.0);
}

TEST_CASE("numerical blowups raise a typed error") {
    const Pair p = make_pair();
    RowMatrixXd x(1, 1);
    x << 1e308;
    CHECK_THROWS_AS(solve(p.ds, make_external_embeddings(x), p.hp),
                    NumericalError);
}

TEST_CASE("hyperparameters are validated") {
    HyperParams hp;
    hp.lambda = -0.1;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = {};
    hp.epsilon = 0.0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = {};
    hp.max_iter = 0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
}
