#include "otss/types.hpp"

#include <stdexcept>

namespace otss {

ContextVector::ContextVector(Vec sig, Vec nui)
    : signal(std::move(sig)), nuisance(std::move(nui)) {
    if (signal.size() < 1) throw std::invalid_argument("ContextVector: d_sig must be >= 1");
    if (!signal.allFinite() || !nuisance.allFinite())
        throw std::invalid_argument("ContextVector: non-finite entry");
}

DecisionLibrary::DecisionLibrary(Mat factors) : factors_(std::move(factors)) {
    if (factors_.rows() < 1) throw std::invalid_argument("DecisionLibrary: empty library");
    if (!factors_.allFinite()) throw std::invalid_argument("DecisionLibrary: non-finite factor");
}

LoggedRecord LoggedDataset::record(int i) const {
    LoggedRecord r;
    Vec x = contexts.row(i).transpose();
    r.context = ContextVector(x.head(d_sig), x.tail(context_dim() - d_sig));
    r.decision_index = decisions[static_cast<size_t>(i)];
    r.outcome = static_cast<int>(outcomes[i]);
    return r;
}

void LoggedDataset::validate() const {
    const int m = static_cast<int>(decisions.size());
    if (m != n() || outcomes.size() != n() || logged_factors.rows() != n())
        throw std::invalid_argument("LoggedDataset: inconsistent row counts");
    if (d_sig < 1 || d_sig > context_dim())
        throw std::invalid_argument("LoggedDataset: bad d_sig");
    if (!contexts.allFinite() || !logged_factors.allFinite())
        throw std::invalid_argument("LoggedDataset: non-finite entry");
    for (int i = 0; i < n(); ++i) {
        if (decisions[static_cast<size_t>(i)] < 0 ||
            decisions[static_cast<size_t>(i)] >= library.size())
            throw std::invalid_argument("LoggedDataset: decision index out of range");
        if (outcomes[i] != 0.0 && outcomes[i] != 1.0)
            throw std::invalid_argument("LoggedDataset: outcome not binary");
    }
}

} // namespace otss
