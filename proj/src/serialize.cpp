#include "otss/serialize.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace otss::io {

std::string format_hex(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
    if (ec != std::errc()) throw std::runtime_error("format_hex: to_chars failed");
    return std::string(buf, ptr);
}

double parse_hex(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("parse_hex: bad token '" + s + "'");
    return v;
}

std::string format_shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_shortest: to_chars failed");
    return std::string(buf, ptr);
}

void write_vec(std::ostream& os, const std::string& key, const Vec& v) {
    os << key << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << format_hex(v[i]);
    os << '\n';
}

void write_mat(std::ostream& os, const std::string& key, const Mat& m) {
    os << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        os << "row";
        for (Eigen::Index c = 0; c < m.cols(); ++c) os << ' ' << format_hex(m(r, c));
        os << '\n';
    }
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

} // namespace

std::string LineReader::expect(const std::string& key) {
    std::string line;
    if (!std::getline(is_, line))
        throw std::runtime_error("serialize: unexpected end of file, wanted key '" + key + "'");
    ++line_no_;
    if (line.rfind(key, 0) != 0 || (line.size() > key.size() && line[key.size()] != ' '))
        throw std::runtime_error("serialize: line " + std::to_string(line_no_) + " wanted key '" +
                                 key + "', got '" + line.substr(0, 40) + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
}

double LineReader::expect_real(const std::string& key) { return parse_hex(expect(key)); }

long long LineReader::expect_int(const std::string& key) {
    const std::string body = expect(key);
    return std::stoll(body);
}

Vec LineReader::expect_vec(const std::string& key) {
    const auto toks = split_ws(expect(key));
    if (toks.empty()) throw std::runtime_error("serialize: empty vector line for '" + key + "'");
    const auto n = std::stoll(toks[0]);
    if (static_cast<long long>(toks.size()) != n + 1)
        throw std::runtime_error("serialize: vector '" + key + "' length mismatch");
    Vec v(n);
    for (long long i = 0; i < n; ++i) v[i] = parse_hex(toks[static_cast<size_t>(i) + 1]);
    return v;
}

Mat LineReader::expect_mat(const std::string& key) {
    const auto head = split_ws(expect(key));
    if (head.size() != 2) throw std::runtime_error("serialize: matrix '" + key + "' bad header");
    const auto rows = std::stoll(head[0]);
    const auto cols = std::stoll(head[1]);
    Mat m(rows, cols);
    for (long long r = 0; r < rows; ++r) {
        const auto toks = split_ws(expect("row"));
        if (static_cast<long long>(toks.size()) != cols)
            throw std::runtime_error("serialize: matrix '" + key + "' row length mismatch");
        for (long long c = 0; c < cols; ++c) m(r, c) = parse_hex(toks[static_cast<size_t>(c)]);
    }
    return m;
}

void write_truth(std::ostream& os, const bench::Truth& truth) {
    if (const auto* two = std::get_if<bench::TwoExpertTruth>(&truth)) {
        os << "truth two_expert\n";
        write_vec(os, "beta1", two->beta1);
        write_vec(os, "beta2", two->beta2);
        os << "tau " << format_hex(two->tau) << '\n';
        write_vec(os, "u", two->u);
        write_vec(os, "baseline_coef", two->baseline_coef);
        return;
    }
    const auto& mk = std::get<bench::MatchedKTruth>(truth);
    os << "truth matched_k\n";
    os << "mode " << (mk.mode == bench::TruthMode::hard ? "hard" : "soft") << '\n';
    write_mat(os, "experts", mk.experts);
    write_mat(os, "gate_directions", mk.gate_directions);
    os << "temperature " << format_hex(mk.temperature) << '\n';
    os << "rand_level " << format_hex(mk.rand_level) << '\n';
    write_vec(os, "baseline_coef", mk.baseline_coef);
}

bench::Truth read_truth(LineReader& r) {
    const std::string kind = r.expect("truth");
    if (kind == "two_expert") {
        bench::TwoExpertTruth two;
        two.beta1 = r.expect_vec("beta1");
        two.beta2 = r.expect_vec("beta2");
        two.tau = r.expect_real("tau");
        two.u = r.expect_vec("u");
        two.baseline_coef = r.expect_vec("baseline_coef");
        return two;
    }
    if (kind != "matched_k") throw std::runtime_error("serialize: unknown truth kind '" + kind + "'");
    bench::MatchedKTruth mk;
    const std::string mode = r.expect("mode");
    if (mode != "hard" && mode != "soft")
        throw std::runtime_error("serialize: unknown truth mode '" + mode + "'");
    mk.mode = mode == "hard" ? bench::TruthMode::hard : bench::TruthMode::soft;
    mk.experts = r.expect_mat("experts");
    mk.gate_directions = r.expect_mat("gate_directions");
    mk.temperature = r.expect_real("temperature");
    mk.rand_level = r.expect_real("rand_level");
    mk.baseline_coef = r.expect_vec("baseline_coef");
    return mk;
}

namespace {

void write_records(std::ostream& os, const std::string& key, const LoggedDataset& ds) {
    os << key << ' ' << ds.n() << '\n';
    for (int i = 0; i < ds.n(); ++i) {
        os << "rec " << ds.decisions[static_cast<size_t>(i)] << ' '
           << static_cast<int>(ds.outcomes[i]);
        for (Eigen::Index c = 0; c < ds.contexts.cols(); ++c)
            os << ' ' << format_hex(ds.contexts(i, c));
        os << '\n';
    }
}

LoggedDataset read_records(LineReader& r, const std::string& key, const bench::BenchConfig& config,
                           const DecisionLibrary& lib) {
    const long long n = std::stoll(r.expect(key));
    LoggedDataset ds;
    ds.contexts.resize(n, config.context_dim());
    ds.logged_factors.resize(n, config.J);
    ds.decisions.resize(static_cast<size_t>(n));
    ds.outcomes.resize(n);
    ds.d_sig = config.d_sig;
    ds.library = lib;
    for (long long i = 0; i < n; ++i) {
        const auto toks = split_ws(r.expect("rec"));
        if (static_cast<long long>(toks.size()) != 2 + config.context_dim())
            throw std::runtime_error("serialize: record token count mismatch");
        const int d = std::stoi(toks[0]);
        ds.decisions[static_cast<size_t>(i)] = d;
        ds.outcomes[i] = std::stod(toks[1]);
        for (int c = 0; c < config.context_dim(); ++c)
            ds.contexts(i, c) = parse_hex(toks[static_cast<size_t>(c) + 2]);
        ds.logged_factors.row(i) = lib.factors().row(d);
    }
    ds.validate();
    return ds;
}

} // namespace

void save_benchmark(std::ostream& os, const bench::BenchmarkInstance& inst) {
    const auto& c = inst.config;
    os << "otss-benchmark 1\n";
    os << "family " << (inst.family == bench::Family::two_expert ? "two_expert" : "matched_k")
       << '\n';
    os << "n_total " << c.n_total << '\n';
    os << "n_train " << c.n_train << '\n';
    os << "d_sig " << c.d_sig << '\n';
    os << "d_nuis " << c.d_nuis << '\n';
    os << "J " << c.J << '\n';
    os << "M " << c.M << '\n';
    os << "K " << c.K << '\n';
    os << "tau " << format_hex(c.tau) << '\n';
    os << "target_top_prob " << format_hex(c.target_top_prob) << '\n';
    os << "nuisance_scale " << format_hex(c.nuisance_scale) << '\n';
    os << "rand_level " << format_hex(c.rand_level) << '\n';
    os << "seed " << c.seed << '\n';
    write_truth(os, inst.truth);
    write_mat(os, "library", inst.library.factors());
    write_records(os, "train", inst.train);
    write_records(os, "val", inst.val);
    os << "eval " << inst.eval.size() << '\n';
    for (const auto& pt : inst.eval) {
        os << "pt";
        const Vec full = pt.context.full();
        for (Eigen::Index i = 0; i < full.size(); ++i) os << ' ' << format_hex(full[i]);
        for (Eigen::Index j = 0; j < pt.w_star.size(); ++j) os << ' ' << format_hex(pt.w_star[j]);
        os << '\n';
    }
}

bench::BenchmarkInstance load_benchmark(std::istream& is) {
    LineReader r(is);
    const std::string version = r.expect("otss-benchmark");
    if (version != "1") throw std::runtime_error("load_benchmark: unsupported version " + version);

    bench::BenchmarkInstance inst;
    const std::string family = r.expect("family");
    if (family != "two_expert" && family != "matched_k")
        throw std::runtime_error("load_benchmark: unknown family '" + family + "'");
    inst.family = family == "two_expert" ? bench::Family::two_expert : bench::Family::matched_k;

    bench::BenchConfig& c = inst.config;
    c.n_total = static_cast<int>(r.expect_int("n_total"));
    c.n_train = static_cast<int>(r.expect_int("n_train"));
    c.d_sig = static_cast<int>(r.expect_int("d_sig"));
    c.d_nuis = static_cast<int>(r.expect_int("d_nuis"));
    c.J = static_cast<int>(r.expect_int("J"));
    c.M = static_cast<int>(r.expect_int("M"));
    c.K = static_cast<int>(r.expect_int("K"));
    c.tau = r.expect_real("tau");
    c.target_top_prob = r.expect_real("target_top_prob");
    c.nuisance_scale = r.expect_real("nuisance_scale");
    c.rand_level = r.expect_real("rand_level");
    c.seed = static_cast<std::uint64_t>(r.expect_int("seed"));

    inst.truth = read_truth(r);
    inst.library = DecisionLibrary(r.expect_mat("library"));
    inst.train = read_records(r, "train", c, inst.library);
    inst.val = read_records(r, "val", c, inst.library);

    const long long n_eval = std::stoll(r.expect("eval"));
    inst.eval.reserve(static_cast<size_t>(n_eval));
    for (long long i = 0; i < n_eval; ++i) {
        const auto toks = split_ws(r.expect("pt"));
        if (static_cast<long long>(toks.size()) != c.context_dim() + c.J)
            throw std::runtime_error("load_benchmark: eval point token count mismatch");
        Vec sig(c.d_sig), nui(c.d_nuis), w(c.J);
        for (int k = 0; k < c.d_sig; ++k) sig[k] = parse_hex(toks[static_cast<size_t>(k)]);
        for (int k = 0; k < c.d_nuis; ++k)
            nui[k] = parse_hex(toks[static_cast<size_t>(c.d_sig + k)]);
        for (int j = 0; j < c.J; ++j)
            w[j] = parse_hex(toks[static_cast<size_t>(c.context_dim() + j)]);
        bench::EvalPoint pt;
        pt.context = ContextVector(std::move(sig), std::move(nui));
        pt.w_star = std::move(w);
        inst.eval.push_back(std::move(pt));
    }
    return inst;
}

void save_benchmark_file(const std::string& path, const bench::BenchmarkInstance& inst) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_benchmark_file: cannot open " + path);
    save_benchmark(os, inst);
    if (!os) throw std::runtime_error("save_benchmark_file: write failed for " + path);
}

bench::BenchmarkInstance load_benchmark_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_benchmark_file: cannot open " + path);
    return load_benchmark(is);
}

} // namespace otss::io
