#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mlam/experiment.hpp"
#include "mlam/trajectory_io.hpp"

using namespace mlam;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ExperimentSpec tiny_mc_spec(const std::string& out) {
    ExperimentSpec spec;
    spec.kind = "mc-obsrate";
    spec.apply_scale_presets();
    spec.conditions = {0.6};
    spec.dim = 6;
    spec.rank = 2;
    spec.p = 2;
    spec.n_train = 2;
    spec.n_test = 3;
    spec.mlam.T = 4;
    spec.mlam.t_in = 1;
    spec.mlam.t_out = 2;
    spec.mlam.hidden_size = 3;
    spec.mlam.seed = 3;
    spec.sgd.max_iters = 20;
    spec.sgd_lr_grid = {0.01, 0.05};
    spec.als.max_iters = 10;
    spec.master_seed = 12;
    spec.out_dir = out;
    return spec;
}

}  // namespace

TEST_CASE("spec parsing applies presets then explicit overrides") {
    std::string text = R"({"kind":"mc-obsrate","scale":"desk","n_train":4,"master_seed":5})";
    ExperimentSpec spec = spec_from_json(text);
    CHECK(spec.dim == 10);
    CHECK(spec.rank == 2);
    CHECK(spec.conditions == std::vector<double>{0.2, 0.4, 0.6, 0.8});
    CHECK(spec.n_train == 4);
    CHECK(spec.master_seed == 5);

    std::string paper = R"({"kind":"gmm-dim","scale":"paper"})";
    ExperimentSpec pspec = spec_from_json(paper);
    CHECK(pspec.conditions == std::vector<double>{4, 8, 16, 32, 64});
    CHECK(pspec.mlam.hidden_size == 500);
    CHECK(pspec.n_train == 100);

    CHECK_THROWS_AS(spec_from_json(R"({"kind":"bogus"})").validate(), ValueError);
}

TEST_CASE("train and test seeds are disjoint") {
    ExperimentSpec spec = tiny_mc_spec("unused");
    auto train = make_problem_set(spec, "rate=0.6", 0.6, true, 10);
    auto test = make_problem_set(spec, "rate=0.6", 0.6, false, 10);
    for (const auto& tr : train)
        for (const auto& te : test) CHECK(tr->seed() != te->seed());
}

TEST_CASE("run_experiment writes a complete artifact set deterministically") {
    fs::path base = fs::temp_directory_path() / "mlam_exp_test";
    fs::remove_all(base);
    ExperimentSpec spec1 = tiny_mc_spec((base / "run1").string());
    ExperimentSpec spec2 = tiny_mc_spec((base / "run2").string());

    ResultTable t1 = run_experiment(spec1);
    ResultTable t2 = run_experiment(spec2);

    CHECK(fs::exists(base / "run1" / "table.csv"));
    CHECK(fs::exists(base / "run1" / "timings.csv"));
    CHECK(fs::exists(base / "run1" / "manifest.json"));
    CHECK(t1.cells.size() == 3);  // mlam, sgd, als for one condition

    // identical bytes across reruns (wall clock lives in timings.csv)
    CHECK(read_file(base / "run1" / "table.csv") == read_file(base / "run2" / "table.csv"));

    // every referenced trajectory file exists next to the table
    for (const ResultCell& c : t1.cells) {
        CHECK_FALSE(c.trajectory_file.empty());
        CHECK(fs::exists(base / "run1" / c.trajectory_file));
    }

    // eval from the manifest reproduces the mlam metric columns exactly
    ResultTable re = eval_from_manifest((base / "run1" / "manifest.json").string(),
                                        (base / "eval").string());
    const ResultCell* orig = t1.find("mlam", "rate=0.6");
    const ResultCell* redo = re.find("mlam", "rate=0.6");
    REQUIRE(orig != nullptr);
    REQUIRE(redo != nullptr);
    CHECK(format_double(orig->mean) == format_double(redo->mean));
    CHECK(format_double(orig->variance) == format_double(redo->variance));
}

TEST_CASE("gmm experiment with em baseline") {
    fs::path out = fs::temp_directory_path() / "mlam_exp_gmm";
    fs::remove_all(out);
    ExperimentSpec spec;
    spec.kind = "gmm-dim";
    spec.apply_scale_presets();
    spec.conditions = {2};
    spec.gmm_k = 2;
    spec.gmm_g = 40;
    spec.n_train = 2;
    spec.n_test = 2;
    spec.mlam.T = 4;
    spec.mlam.t_in = 1;
    spec.mlam.t_out = 2;
    spec.mlam.hidden_size = 3;
    spec.em.max_iters = 30;
    spec.master_seed = 9;
    spec.out_dir = out.string();
    ResultTable t = run_experiment(spec);
    CHECK(t.find("mlam", "D=2") != nullptr);
    CHECK(t.find("em", "D=2") != nullptr);
    CHECK(t.find("em", "D=2")->n_success == 2);
}

TEST_CASE("mixed-rank experiment groups cells by true rank") {
    fs::path out = fs::temp_directory_path() / "mlam_exp_mixed";
    fs::remove_all(out);
    ExperimentSpec spec;
    spec.kind = "mc-mixed";
    spec.apply_scale_presets();
    spec.conditions = {2};
    spec.dim = 6;
    spec.obs_rate = 0.6;
    spec.n_train = 2;
    spec.n_test = 6;
    spec.methods = {"als"};
    spec.als.max_iters = 5;
    spec.mlam.T = 2;
    spec.mlam.t_in = 1;
    spec.mlam.t_out = 2;
    spec.mlam.hidden_size = 2;
    spec.master_seed = 4;
    spec.out_dir = out.string();
    ResultTable t = run_experiment(spec);
    // ranks cycle {1..6}; 6 test problems -> 6 distinct rank cells
    CHECK(t.cells.size() == 6);
    CHECK(t.find("als", "p=2,rank=1") != nullptr);
}

TEST_CASE("sweep adjusts T to the nearest window multiple") {
    fs::path out = fs::temp_directory_path() / "mlam_exp_sweep";
    fs::remove_all(out);
    ExperimentSpec spec;
    spec.kind = "sweep-tin-tout";
    spec.apply_scale_presets();
    spec.dim = 5;
    spec.rank = 1;
    spec.p = 1;
    spec.obs_rate = 0.6;
    spec.n_train = 1;
    spec.n_test = 1;
    spec.sweep_t_in = {1, 2};
    spec.sweep_t_out = {2, 3};
    spec.mlam.T = 5;
    spec.mlam.hidden_size = 2;
    spec.master_seed = 6;
    spec.out_dir = out.string();
    ResultTable t = run_experiment(spec);
    CHECK(t.cells.size() == 4);
    // T snaps to the nearest window multiple: round(5/2)=3 -> 6, round(5/3)=2 -> 6
    CHECK(t.find("mlam", "t_in=1,t_out=2,T=6") != nullptr);
    CHECK(t.find("mlam", "t_in=2,t_out=3,T=6") != nullptr);
}
