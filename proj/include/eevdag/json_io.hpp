#pragma once
// JSON builders shared by the stream writers and the CLI. Key order is
// fixed so identical values serialize to identical bytes.

#include "json.hpp"

#include "eevdag/score.hpp"
#include "eevdag/search.hpp"

namespace eevdag {

nlohmann::ordered_json fit_to_json(const Fit& fit);
nlohmann::ordered_json search_result_to_json(const SearchResult& result, bool verbose);

}  // namespace eevdag
