#include "chromaq/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "chromaq/errors.hpp"

namespace chromaq {

void symmetric_eigen(const Matrix& sym, std::vector<double>& values, Matrix& vectors) {
    const std::size_t d = sym.rows();
    if (sym.cols() != d) throw DimensionMismatch("symmetric_eigen: matrix not square");

    Matrix a = sym;
    Matrix v(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;

    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) norm += a(i, j) * a(i, j);
    }
    norm = std::sqrt(norm);
    const double stop = std::max(1e-300, 1e-14 * norm);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
        }
        if (std::sqrt(2.0 * off) < stop) break;

        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(d);
    for (std::size_t i = 0; i < d; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    values.resize(d);
    vectors = Matrix(d, d);
    for (std::size_t r = 0; r < d; ++r) {
        values[r] = diag[order[r]];
        for (std::size_t k = 0; k < d; ++k) vectors(r, k) = v(k, order[r]);
    }
}

PcaModel fit_pca(const Matrix& m, std::size_t n_components) {
    const std::size_t n = m.rows(), d = m.cols();
    if (n_components == 0 || n_components > d) {
        throw DimensionMismatch("fit_pca: n_components must be in [1, n_features]");
    }
    if (n <= n_components) {
        throw TooFewSamples("fit_pca: need more samples than retained components");
    }

    PcaModel model;
    model.mean.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += m(r, c);
        model.mean[c] = sum / static_cast<double>(n);
    }

    Matrix cov(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                sum += (m(r, i) - model.mean[i]) * (m(r, j) - model.mean[j]);
            }
            const double v = sum / static_cast<double>(n - 1);
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }

    std::vector<double> eig;
    Matrix vec;
    symmetric_eigen(cov, eig, vec);

    double total = 0.0;
    for (double& e : eig) {
        if (e < 0.0 && e > -1e-12) e = 0.0; // numerical dust
        total += e;
    }
    if (!(total > 0.0)) throw ZeroVarianceFeature("fit_pca: zero total variance");

    model.full_ratios.resize(d);
    for (std::size_t i = 0; i < d; ++i) model.full_ratios[i] = eig[i] / total;

    model.components = Matrix(n_components, d);
    model.eigenvalues.assign(eig.begin(), eig.begin() + static_cast<std::ptrdiff_t>(n_components));
    model.variance_ratios.assign(model.full_ratios.begin(),
                                 model.full_ratios.begin() +
                                     static_cast<std::ptrdiff_t>(n_components));
    for (std::size_t r = 0; r < n_components; ++r) {
        // Sign convention: the largest-magnitude coordinate points positive.
        std::size_t big = 0;
        for (std::size_t k = 1; k < d; ++k) {
            if (std::abs(vec(r, k)) > std::abs(vec(r, big))) big = k;
        }
        const double flip = vec(r, big) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < d; ++k) model.components(r, k) = flip * vec(r, k);
        if (model.eigenvalues[r] < 1e-12) model.rank_deficient = true;
    }
    return model;
}

Matrix transform(const PcaModel& model, const Matrix& m) {
    if (m.cols() != model.n_features()) {
        throw DimensionMismatch("transform: feature count does not match the model");
    }
    Matrix out(m.rows(), model.n_components());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < model.n_components(); ++c) {
            double dot = 0.0;
            for (std::size_t k = 0; k < model.n_features(); ++k) {
                dot += (m(r, k) - model.mean[k]) * model.components(c, k);
            }
            out(r, c) = dot;
        }
    }
    return out;
}

std::size_t choose_components(const std::vector<double>& ratios, double threshold) {
    if (ratios.empty()) throw Error("choose_components: empty ratio list");
    double cum = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (ratios[i] < 0.0 || ratios[i] > 1.0 + 1e-12) {
            throw Error("choose_components: ratio out of [0, 1]");
        }
        cum += ratios[i];
        if (cum > threshold) return i + 1;
    }
    return ratios.size();
}

std::string pca_to_json(const PcaModel& model) {
    nlohmann::json j;
    j["mean"] = model.mean;
    j["eigenvalues"] = model.eigenvalues;
    j["variance_ratios"] = model.variance_ratios;
    j["full_ratios"] = model.full_ratios;
    j["rank_deficient"] = model.rank_deficient;
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < model.components.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (std::size_t c = 0; c < model.components.cols(); ++c) {
            row.push_back(model.components(r, c));
        }
        rows.push_back(std::move(row));
    }
    j["components"] = std::move(rows);
    return j.dump(2);
}

PcaModel pca_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pca_from_json: ") + e.what());
    }
    PcaModel model;
    try {
        model.mean = j.at("mean").get<std::vector<double>>();
        model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        model.variance_ratios = j.at("variance_ratios").get<std::vector<double>>();
        model.full_ratios = j.at("full_ratios").get<std::vector<double>>();
        model.rank_deficient = j.at("rank_deficient").get<bool>();
        const auto& rows = j.at("components");
        const std::size_t nr = rows.size();
        const std::size_t nc = nr > 0 ? rows[0].size() : 0;
        model.components = Matrix(nr, nc);
        for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nc; ++c) {
                model.components(r, c) = rows[r][c].get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pca_from_json: malformed model: ") + e.what());
    }
    return model;
}

} // namespace chromaq
