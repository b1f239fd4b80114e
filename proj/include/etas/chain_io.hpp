#pragma once

#include <filesystem>
#include <iosfwd>

#include "etas/catalog.hpp"
#include "etas/sampler.hpp"

namespace etas {

/// Columns sample_index, mu_bar, K_bar, alpha, c, p, d, q, n_immigrants,
/// loglik_full, loglik_branched. Values round-trip exactly.
void write_chain_csv(const Chain& chain, std::ostream& out);
/// Mixture components of every retained DP realization, keyed by
/// sample_index. Writes only the header for other backgrounds.
void write_dp_sidecar(const Chain& chain, std::ostream& out);

/// Writes chain.csv, chain_meta.txt and, for the DP background,
/// dp_realizations.csv into `dir`.
void save_chain(const Chain& chain, const Catalog& fitted, const std::filesystem::path& dir);

/// Reads a chain saved by save_chain. `fitted` must be the catalog the chain
/// was fitted to; it supplies the KDE points. Branching vectors are not
/// stored, so loaded samples carry empty ones.
[[nodiscard]] Chain load_chain(const std::filesystem::path& dir, const Catalog& fitted);

}  // namespace etas
