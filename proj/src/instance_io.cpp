#include "uampsbl/instance_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

namespace uampsbl {

namespace {

constexpr const char* kHeader = "uampsbl-instance v1";

void write_matrix(std::ostream& os, const char* tag, const Matrix& m) {
    os << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
        os << '\n';
    }
}

double read_double(std::istream& is) {
    std::string tok;
    if (!(is >> tok)) throw std::runtime_error("instance file truncated");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw std::runtime_error("bad number: " + tok);
    return v;
}

void expect(std::istream& is, const std::string& tag) {
    std::string tok;
    if (!(is >> tok) || tok != tag)
        throw std::runtime_error("instance file: expected '" + tag + "', got '" + tok + "'");
}

Matrix read_matrix(std::istream& is, const std::string& tag) {
    expect(is, tag);
    Index rows = -1, cols = -1;
    if (!(is >> rows >> cols) || rows < 0 || cols < 0)
        throw std::runtime_error("instance file: bad shape for " + tag);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = read_double(is);
    return m;
}

} // namespace

void save_instance(std::ostream& os, const ProblemInstance& inst) {
    os << kHeader << '\n' << std::setprecision(17);
    os << "beta ";
    if (std::isinf(inst.beta_true))
        os << "inf\n";
    else
        os << inst.beta_true << '\n';
    write_matrix(os, "A", inst.A);
    write_matrix(os, "X", inst.X);
    write_matrix(os, "Y", inst.Y);
    os << "support " << inst.support.size();
    for (Index i : inst.support) os << ' ' << i;
    os << '\n';
}

ProblemInstance load_instance(std::istream& is) {
    std::string header;
    std::getline(is, header);
    if (header != kHeader) throw std::runtime_error("not a uampsbl instance file");
    ProblemInstance p;
    expect(is, "beta");
    p.beta_true = read_double(is);
    p.A = read_matrix(is, "A");
    p.X = read_matrix(is, "X");
    p.Y = read_matrix(is, "Y");
    if (p.A.rows() != p.Y.rows() || p.A.cols() != p.X.rows() || p.X.cols() != p.Y.cols())
        throw std::runtime_error("instance file: inconsistent shapes");
    expect(is, "support");
    std::size_t k = 0;
    if (!(is >> k)) throw std::runtime_error("instance file: bad support size");
    p.support.resize(k);
    for (auto& i : p.support)
        if (!(is >> i) || i < 0 || i >= p.A.cols())
            throw std::runtime_error("instance file: bad support index");
    return p;
}

void save_instance(const std::string& path, const ProblemInstance& inst) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save_instance(os, inst);
    if (!os) throw std::runtime_error("write to " + path + " failed");
}

ProblemInstance load_instance(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return load_instance(is);
}

} // namespace uampsbl
