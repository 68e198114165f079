// ubp: command-line front end for the unaligned block pruning toolkit.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ubp/bench.hpp"
#include "ubp/kernels.hpp"
#include "ubp/packed_sparse.hpp"
#include "ubp/selection.hpp"
#include "ubp/tensor_io.hpp"

using json = nlohmann::json;

namespace {

std::vector<int> parse_shape(const std::string& text) {
    std::vector<int> dims;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) dims.push_back(std::stoi(part));
    return dims;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw std::runtime_error("short write to " + path);
}

ubp::Method parse_method(const std::string& name) {
    auto m = ubp::method_from_name(name);
    if (!m) throw CLI::ValidationError("--method", "unknown method '" + name + "'");
    return *m;
}

ubp::Dataflow parse_dataflow(const std::string& name) {
    if (name == "aligned") return ubp::Dataflow::aligned;
    if (name == "naive") return ubp::Dataflow::unaligned_naive;
    if (name == "wros") return ubp::Dataflow::unaligned_wros;
    throw CLI::ValidationError("--dataflow", "unknown dataflow '" + name + "'");
}

ubp::SweepSpec load_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j = json::parse(f);
    ubp::SweepSpec spec;
    for (const auto& s : j.at("shapes")) {
        if (s.size() == 3)
            spec.shapes.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
        else
            spec.shapes.push_back({s[0].get<int>(), s[1].get<int>(), 196});
    }
    spec.block_sizes = j.at("block_sizes").get<std::vector<int>>();
    spec.sparsities = j.at("sparsities").get<std::vector<double>>();
    if (j.contains("methods"))
        for (const auto& m : j["methods"]) spec.methods.push_back(parse_method(m.get<std::string>()));
    if (j.contains("kernels"))
        for (const auto& k : j["kernels"]) spec.kernels.push_back(parse_dataflow(k.get<std::string>()));
    spec.repeats = j.value("repeats", 5);
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.dp_timeout_s = j.value("dp_timeout_s", 60.0);
    spec.threads = j.value("threads", 1);
    spec.nr = j.value("nr", 4);
    return spec;
}

ubp::BlockSelection load_selection(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j = json::parse(f);
    ubp::BlockSelection sel;
    sel.c_out = j.at("c_out").get<int>();
    sel.c_in = j.at("c_in").get<int>();
    sel.n = j.at("n").get<int>();
    sel.starts = j.at("starts").get<std::vector<int>>();
    sel.check();
    return sel;
}

int cmd_gen(const std::string& shape_text, std::uint64_t seed, const std::string& dist_name,
            const std::string& out) {
    const ubp::Dist dist = dist_name == "gaussian" ? ubp::Dist::gaussian : ubp::Dist::uniform;
    const auto dims = parse_shape(shape_text);
    if (dims.size() == 4) {
        ubp::store_tensor(ubp::gen_tensor(dims[0], dims[1], dims[2], dims[3], seed, dist), out);
    } else if (dims.size() == 2) {
        ubp::store_tensor(ubp::gen_matrix(dims[0], dims[1], seed, dist), out);
    } else {
        std::cerr << "gen: --shape must be CxCxHxW (weights) or RxC (activations)\n";
        return 1;
    }
    return 0;
}

int cmd_select(const std::string& in, const std::string& method_name, int n, double sparsity,
               const std::string& out) {
    const ubp::WeightTensor w = ubp::load_weights(in);
    const ubp::Method method = parse_method(method_name);

    json j;
    j["method"] = method_name;
    j["c_out"] = w.c_out;
    j["c_in"] = w.c_in;
    j["kh"] = w.kh;
    j["kw"] = w.kw;
    j["n"] = n;
    j["sparsity"] = sparsity;

    if (method == ubp::Method::ep) {
        const ubp::ElementMask mask = ubp::select_ep(w, sparsity);
        j["kept_elements"] = mask.kept();
        j["kept_score"] = ubp::kept_score(w, mask);
    } else {
        const ubp::ScoreArray s = ubp::score_blocks(w, n);
        const int m = ubp::blocks_for_sparsity(s.candidates(), n, sparsity);
        ubp::BlockSelection sel;
        switch (method) {
            case ubp::Method::greedy: sel = ubp::select_greedy(s, m); break;
            case ubp::Method::bed: sel = ubp::select_bed(s, m); break;
            case ubp::Method::optimal: sel = ubp::select_optimal(s, m); break;
            case ubp::Method::abp: sel = ubp::select_abp(s, m); break;
            case ubp::Method::ep: break;
        }
        j["m"] = sel.m();
        j["starts"] = sel.starts;
        j["kept_score"] = ubp::kept_score(w, sel);
    }
    write_text(out, j.dump(2) + "\n");
    return 0;
}

int cmd_efficacy(const std::string& in, int n, double sparsity,
                 const std::vector<std::string>& method_names, const std::string& csv_out) {
    const ubp::WeightTensor w = ubp::load_weights(in);
    std::ostringstream os;
    os << "method,n,sparsity,kept_score,efficacy\n";
    for (const auto& name : method_names) {
        const ubp::Method method = parse_method(name);
        const ubp::ScoreArray s = ubp::score_blocks(w, n);
        const int m = ubp::blocks_for_sparsity(s.candidates(), n, sparsity);
        double kept = 0.0;
        switch (method) {
            case ubp::Method::greedy: kept = ubp::kept_score(w, ubp::select_greedy(s, m)); break;
            case ubp::Method::bed: kept = ubp::kept_score(w, ubp::select_bed(s, m)); break;
            case ubp::Method::optimal: kept = ubp::kept_score(w, ubp::select_optimal(s, m)); break;
            case ubp::Method::abp: kept = ubp::kept_score(w, ubp::select_abp(s, m)); break;
            case ubp::Method::ep: kept = ubp::kept_score(w, ubp::select_ep(w, sparsity)); break;
        }
        ubp::PruningConfig cfg{n, sparsity, method, ubp::ScoreFn::l1};
        auto eff = ubp::efficacy(w, cfg, kept);
        os.precision(17);
        os << name << ',' << n << ',' << sparsity << ',' << kept << ',';
        if (eff) os << *eff;
        else os << "undefined";
        os << '\n';
    }
    write_text(csv_out, os.str());
    return 0;
}

int cmd_pack(const std::string& weights, const std::string& selection, const std::string& dataflow,
             const std::string& out) {
    const ubp::WeightTensor w = ubp::load_weights(weights);
    const ubp::BlockSelection sel = load_selection(selection);
    ubp::store_packed(ubp::pack(w, sel, parse_dataflow(dataflow)), out);
    return 0;
}

int cmd_run(const std::string& weights, const std::string& input, int threads, int nr,
            bool check_dense, const std::string& out) {
    const ubp::PackedSparse p = ubp::load_packed(weights);
    const ubp::ActivationMatrix in = ubp::load_activations(input);
    ubp::TileConfig cfg;
    cfg.nr = nr;
    cfg.threads = threads;
    const ubp::KernelReport rep = ubp::spmm(p, in, cfg);
    if (!out.empty()) ubp::store_tensor(rep.output, out);

    json j;
    j["dataflow"] = ubp::dataflow_name(p.dataflow);
    j["register_copies"] = rep.register_copies;
    j["epilogue_stores"] = rep.epilogue_stores;
    j["elapsed_s"] = rep.elapsed;
    j["gflops"] = rep.elapsed > 0.0 ? static_cast<double>(rep.flops) / rep.elapsed / 1e9 : 0.0;

    bool ok = true;
    if (check_dense) {
        const double err = ubp::normalized_max_diff(rep.output, ubp::dense_ref(ubp::densify(p), in));
        j["max_rel_err"] = err;
        ok = err <= 1e-5;
        j["dense_check"] = ok ? "pass" : "fail";
    }
    std::cout << j.dump(2) << "\n";
    return ok ? 0 : 2;
}

int cmd_bench(const std::string& kind, const std::string& spec_path, const std::string& preset,
              const std::string& csv_out) {
    ubp::SweepSpec spec;
    if (!preset.empty()) {
        if (preset != "mobilenetv1") throw std::runtime_error("unknown preset '" + preset + "'");
        spec = ubp::mobilenet_v1_preset();
    } else if (!spec_path.empty()) {
        spec = load_spec(spec_path);
    } else {
        throw std::runtime_error("bench: pass --spec FILE or --preset NAME");
    }

    bool all_correct = true;
    std::string csv;
    if (kind == "efficacy") {
        if (spec.methods.empty())
            spec.methods = {ubp::Method::greedy, ubp::Method::bed, ubp::Method::optimal,
                            ubp::Method::abp, ubp::Method::ep};
        csv = ubp::to_csv(ubp::sweep_efficacy(spec));
    } else if (kind == "kernels") {
        if (spec.kernels.empty())
            spec.kernels = {ubp::Dataflow::aligned, ubp::Dataflow::unaligned_naive,
                            ubp::Dataflow::unaligned_wros};
        auto rows = ubp::sweep_kernels(spec);
        for (const auto& r : rows) all_correct = all_correct && r.correct;
        csv = ubp::to_csv(rows);
    } else { // timing
        if (spec.methods.empty())
            spec.methods = {ubp::Method::greedy, ubp::Method::bed, ubp::Method::optimal};
        csv = ubp::to_csv(ubp::sweep_selection_timing(spec));
    }
    write_text(csv_out, csv);
    if (!all_correct) {
        std::cerr << "bench: at least one kernel point failed the dense check\n";
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"unaligned 1xN block pruning toolkit"};
    app.require_subcommand(1);

    // gen
    std::string gen_shape, gen_dist = "uniform", gen_out;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen", "synthesize a tensor file");
    gen->add_option("--shape", gen_shape, "CxCxHxW or RxC")->required();
    gen->add_option("--seed", gen_seed, "PRNG seed");
    gen->add_option("--dist", gen_dist, "uniform|gaussian")
        ->check(CLI::IsMember({"uniform", "gaussian"}));
    gen->add_option("--out", gen_out, "output .ubpt")->required();

    // select
    std::string sel_in, sel_method, sel_out;
    int sel_n = 4;
    double sel_sparsity = 0.0;
    auto* sel = app.add_subcommand("select", "run a block selection method");
    sel->add_option("--in", sel_in, "weights .ubpt")->required();
    sel->add_option("--method", sel_method, "greedy|bed|optimal|abp|ep")->required();
    sel->add_option("--block-size", sel_n, "block size N")->required();
    sel->add_option("--sparsity", sel_sparsity, "target pruning rate")->required();
    sel->add_option("--out", sel_out, "selection .json")->required();

    // efficacy
    std::string eff_in, eff_csv;
    int eff_n = 4;
    double eff_sparsity = 0.0;
    std::vector<std::string> eff_methods;
    auto* eff = app.add_subcommand("efficacy", "efficacy of selection methods on one layer");
    eff->add_option("--in", eff_in, "weights .ubpt")->required();
    eff->add_option("--block-size", eff_n)->required();
    eff->add_option("--sparsity", eff_sparsity)->required();
    eff->add_option("--methods", eff_methods, "methods to evaluate")->required()->delimiter(',');
    eff->add_option("--csv", eff_csv, "output CSV")->required();

    // pack
    std::string pack_weights, pack_selection, pack_dataflow, pack_out;
    auto* pk = app.add_subcommand("pack", "pack masked weights into .ubps");
    pk->add_option("--weights", pack_weights)->required();
    pk->add_option("--selection", pack_selection, "selection .json")->required();
    pk->add_option("--dataflow", pack_dataflow, "aligned|naive|wros")->required();
    pk->add_option("--out", pack_out)->required();

    // run
    std::string run_weights, run_input, run_out;
    int run_threads = 1, run_nr = 4;
    bool run_check = false;
    auto* rn = app.add_subcommand("run", "execute a sparse matrix multiply");
    rn->add_option("--weights", run_weights, "packed .ubps")->required();
    rn->add_option("--input", run_input, "activations .ubpt")->required();
    rn->add_option("--threads", run_threads);
    rn->add_option("--nr", run_nr, "column tile width");
    rn->add_flag("--check-dense", run_check, "verify against the dense reference");
    rn->add_option("--out", run_out, "output activations .ubpt");

    // bench
    std::string bench_spec, bench_preset, bench_csv;
    auto* bench = app.add_subcommand("bench", "sweep harness");
    bench->require_subcommand(1);
    std::string bench_kind;
    for (const char* kind : {"efficacy", "kernels", "timing"}) {
        auto* sub = bench->add_subcommand(kind);
        sub->add_option("--spec", bench_spec, "sweep spec .json");
        sub->add_option("--preset", bench_preset, "built-in preset (mobilenetv1)");
        sub->add_option("--csv", bench_csv, "output CSV")->required();
        sub->callback([kind, &bench_kind] { bench_kind = kind; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_shape, gen_seed, gen_dist, gen_out);
        if (sel->parsed()) return cmd_select(sel_in, sel_method, sel_n, sel_sparsity, sel_out);
        if (eff->parsed()) return cmd_efficacy(eff_in, eff_n, eff_sparsity, eff_methods, eff_csv);
        if (pk->parsed()) return cmd_pack(pack_weights, pack_selection, pack_dataflow, pack_out);
        if (rn->parsed()) return cmd_run(run_weights, run_input, run_threads, run_nr, run_check, run_out);
        if (bench->parsed()) return cmd_bench(bench_kind, bench_spec, bench_preset, bench_csv);
    } catch (const std::exception& e) {
        std::cerr << "ubp: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
