#pragma once

#include "otss/bench.hpp"
#include "otss/types.hpp"

#include <iosfwd>
#include <string>

namespace otss::io {

// Lossless text encoding for doubles (C++17 hexfloat to_chars/from_chars);
// round-trips are bit-exact.
std::string format_hex(double v);
double parse_hex(const std::string& s);

// Shortest decimal representation that round-trips; used for CSV output.
std::string format_shortest(double v);

void write_vec(std::ostream& os, const std::string& key, const Vec& v);
void write_mat(std::ostream& os, const std::string& key, const Mat& m);

// Line-oriented reader for the structured-text artifacts: every line is
// "key token token ...". Readers demand keys in writer order, so format
// drift fails loudly instead of misparsing.
class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    std::string expect(const std::string& key); // rest of line
    double expect_real(const std::string& key);
    long long expect_int(const std::string& key);
    Vec expect_vec(const std::string& key);
    Mat expect_mat(const std::string& key);

private:
    std::istream& is_;
    int line_no_ = 0;
};

void write_truth(std::ostream& os, const bench::Truth& truth);
bench::Truth read_truth(LineReader& r);

void save_benchmark(std::ostream& os, const bench::BenchmarkInstance& inst);
bench::BenchmarkInstance load_benchmark(std::istream& is);

void save_benchmark_file(const std::string& path, const bench::BenchmarkInstance& inst);
bench::BenchmarkInstance load_benchmark_file(const std::string& path);

} // namespace otss::io
