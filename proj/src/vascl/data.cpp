#include "data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace vascl {

void MixtureSpec::validate() const {
    if (components.empty()) throw ConfigError("mixture: need at least one component");
    if (dim == 0 || n == 0) throw ConfigError("mixture: dim and n must be positive");
    double wsum = 0.0;
    for (const MixtureComponent& c : components) {
        if (c.mean.size() != dim) throw ConfigError("mixture: mean dimension mismatch");
        if (c.std_dev <= 0.0) throw ConfigError("mixture: std must be > 0");
        if (c.weight < 0.0) throw ConfigError("mixture: negative weight");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("mixture: weights must sum to 1");
}

MixtureSpec make_blob_spec(std::size_t c, std::size_t dim, std::size_t n, double scale,
                           double std_dev) {
    if (c > dim) throw ConfigError("make_blob_spec: need dim >= C for one-hot means");
    MixtureSpec spec;
    spec.dim = dim;
    spec.n = n;
    for (std::size_t i = 0; i < c; ++i) {
        MixtureComponent comp;
        comp.mean.assign(dim, 0.0);
        comp.mean[i] = scale;
        comp.std_dev = std_dev;
        comp.weight = 1.0 / static_cast<double>(c);
        spec.components.push_back(std::move(comp));
    }
    return spec;
}

Dataset generate_mixture(const MixtureSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng = Rng::substream(seed, 0xda7a);
    Dataset out;
    out.x = Matrix(spec.n, spec.dim);
    out.labels.resize(spec.n);
    out.ids.resize(spec.n);
    std::vector<double> cumulative;
    double acc = 0.0;
    for (const MixtureComponent& c : spec.components) {
        acc += c.weight;
        cumulative.push_back(acc);
    }
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double u = rng.uniform();
        std::size_t k = 0;
        while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
        const MixtureComponent& comp = spec.components[k];
        for (std::size_t j = 0; j < spec.dim; ++j) {
            out.x(i, j) = comp.mean[j] + comp.std_dev * rng.gaussian();
        }
        out.labels[i] = static_cast<int>(k);
        out.ids[i] = i;
    }
    return out;
}

std::vector<ScoredPair> generate_graded_pairs(const Dataset& dataset, const MixtureSpec& spec,
                                              std::size_t num_pairs, std::uint64_t seed) {
    spec.validate();
    if (!dataset.has_labels()) throw DataError("graded pairs: dataset lacks component labels");
    const std::size_t c = spec.components.size();
    // pairwise component-mean distances and the median of the nonzero ones
    std::vector<std::vector<double>> comp_dist(c, std::vector<double>(c, 0.0));
    std::vector<double> nonzero;
    double max_dist = 0.0;
    for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t b = a + 1; b < c; ++b) {
            double s = 0.0;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                const double diff = spec.components[a].mean[j] - spec.components[b].mean[j];
                s += diff * diff;
            }
            const double dist = std::sqrt(s);
            comp_dist[a][b] = comp_dist[b][a] = dist;
            nonzero.push_back(dist);
            max_dist = std::max(max_dist, dist);
        }
    }
    double bandwidth = 1.0;
    if (!nonzero.empty()) {
        std::sort(nonzero.begin(), nonzero.end());
        bandwidth = nonzero[nonzero.size() / 2];
        if (bandwidth <= 0.0) bandwidth = 1.0;
    }
    // gold = 5 * exp(-d/bw) rescaled so the farthest component pair maps to
    // exactly 0 and same-component pairs to exactly 5
    const double floor = max_dist > 0.0 ? std::exp(-max_dist / bandwidth) : 0.0;
    auto gold_of = [&](std::size_t a, std::size_t b) {
        if (max_dist <= 0.0) return 5.0;
        const double raw = std::exp(-comp_dist[a][b] / bandwidth);
        return 5.0 * (raw - floor) / (1.0 - floor);
    };
    Rng rng = Rng::substream(seed, 0x9a1d);
    std::vector<ScoredPair> pairs;
    pairs.reserve(num_pairs);
    for (std::size_t i = 0; i < num_pairs; ++i) {
        ScoredPair p;
        p.a = rng.index(dataset.size());
        p.b = rng.index(dataset.size());
        p.gold = gold_of(static_cast<std::size_t>(dataset.labels[p.a]),
                         static_cast<std::size_t>(dataset.labels[p.b]));
        pairs.push_back(p);
    }
    return pairs;
}

namespace {

bool is_integer_token(const std::string& tok) {
    if (tok.empty()) return false;
    std::size_t i = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
    if (i == tok.size()) return false;
    for (; i < tok.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
    return true;
}

Dataset load_text(std::ifstream& in) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::size_t> ids;
    bool labeled = false;
    std::size_t dim = 0;
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (record == 0) {
            if (tokens.size() < 2) throw DataError("embeddings: record 0 has no values");
            // labels present when the second token is an integer literal and
            // at least one value column remains
            labeled = tokens.size() >= 3 && is_integer_token(tokens[1]);
            dim = tokens.size() - (labeled ? 2 : 1);
        }
        const std::size_t expected = dim + (labeled ? 2 : 1);
        if (tokens.size() != expected) {
            throw DataError("embeddings: record " + std::to_string(record) + " has " +
                            std::to_string(tokens.size()) + " fields, expected " +
                            std::to_string(expected) + " (dimension mismatch)");
        }
        try {
            ids.push_back(std::stoull(tokens[0]));
        } catch (const std::exception&) {
            throw DataError("embeddings: record " + std::to_string(record) + " has invalid id");
        }
        std::size_t value_start = 1;
        if (labeled) {
            labels.push_back(std::stoi(tokens[1]));
            value_start = 2;
        }
        std::vector<double> values(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            try {
                values[j] = std::stod(tokens[value_start + j]);
            } catch (const std::exception&) {
                throw DataError("embeddings: record " + std::to_string(record) +
                                " has invalid value");
            }
            if (!std::isfinite(values[j])) {
                throw DataError("embeddings: record " + std::to_string(record) +
                                " has non-finite value");
            }
        }
        rows.push_back(std::move(values));
        ++record;
    }
    if (rows.empty()) throw DataError("embeddings: empty file");
    Dataset out;
    out.x = Matrix(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j) out.x(i, j) = rows[i][j];
    out.labels = std::move(labels);
    out.ids = std::move(ids);
    std::set<std::size_t> unique(out.ids.begin(), out.ids.end());
    if (unique.size() != out.ids.size()) throw DataError("embeddings: duplicate ids");
    return out;
}

constexpr char kVembMagic[4] = {'V', 'E', 'M', 'B'};
constexpr std::uint16_t kVembVersion = 1;

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("embeddings: truncated binary file");
    return v;
}

Dataset load_binary(std::ifstream& in) {
    char magic[4];
    in.read(magic, 4);
    const auto version = read_pod<std::uint16_t>(in);
    if (version != kVembVersion) {
        throw DataError("embeddings: unsupported VEMB version " + std::to_string(version));
    }
    const auto n = read_pod<std::uint64_t>(in);
    const auto d = read_pod<std::uint32_t>(in);
    const auto flags = read_pod<std::uint8_t>(in);
    if (n == 0 || d == 0) throw DataError("embeddings: empty binary dataset");
    if (n > (1ull << 32) || d > (1u << 24)) throw DataError("embeddings: implausible header");
    Dataset out;
    out.x = Matrix(n, d);
    std::vector<float> buf(d);
    for (std::size_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(d * sizeof(float)));
        if (!in) throw DataError("embeddings: truncated payload at record " + std::to_string(i));
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isfinite(buf[j])) {
                throw DataError("embeddings: non-finite value at record " + std::to_string(i));
            }
            out.x(i, j) = static_cast<double>(buf[j]);
        }
    }
    if (flags & 1u) {
        out.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.labels[i] = read_pod<std::int32_t>(in);
        }
    }
    out.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.ids[i] = i;
    return out;
}

}  // namespace

Dataset load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("embeddings: cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (in.gcount() == 0) throw DataError("embeddings: empty file: " + path);
    in.clear();
    in.seekg(0);
    if (in.gcount() >= 0 && std::equal(magic, magic + 4, kVembMagic)) {
        return load_binary(in);
    }
    return load_text(in);
}

void save_embeddings_text(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("embeddings: cannot open for writing: " + path);
    out.precision(17);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out << (i < dataset.ids.size() ? dataset.ids[i] : i);
        if (dataset.has_labels()) out << ' ' << dataset.labels[i];
        for (std::size_t j = 0; j < dataset.dim(); ++j) out << ' ' << dataset.x(i, j);
        out << '\n';
    }
    if (!out) throw DataError("embeddings: write failure: " + path);
}

void save_embeddings_binary(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("embeddings: cannot open for writing: " + path);
    out.write(kVembMagic, 4);
    const std::uint16_t version = kVembVersion;
    const std::uint64_t n = dataset.size();
    const std::uint32_t d = static_cast<std::uint32_t>(dataset.dim());
    const std::uint8_t flags = dataset.has_labels() ? 1u : 0u;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(&flags), sizeof(flags));
    std::vector<float> buf(d);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) buf[j] = static_cast<float>(dataset.x(i, j));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(d * sizeof(float)));
    }
    if (flags & 1u) {
        for (int label : dataset.labels) {
            const std::int32_t v = label;
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
    if (!out) throw DataError("embeddings: write failure: " + path);
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, bool drop_last) {
    if (batch_size < 2) throw ConfigError("batches: batch size must be >= 2");
    if (batch_size > n) throw DataError("batches: batch size exceeds dataset size");
    Rng rng = Rng::substream(seed, 0xba7c);
    const std::vector<std::size_t> perm = rng.permutation(n);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(start + batch_size, n);
        if (drop_last && end - start < batch_size) break;
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace vascl
