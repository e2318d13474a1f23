#pragma once

#include <json.hpp>
#include <string>

#include "ssdss/types.hpp"

namespace ssdss {

using Json = nlohmann::ordered_json;

// ssdss-v1 file schemas. Complex numbers serialize as [re, im] pairs, real
// matrices as plain nested arrays. Frequencies in files are Hz; the library
// converts to rad/s at this boundary. See docs/formats.md.

Json to_json(const ModalModel& m);
Json to_json(const StateSpaceModel& m);
Json to_json(const FrfSet& f);
Json to_json(const InterfaceMap& m);
Json to_json(const RcmConfig& c);

ModalModel modal_from_json(const Json& j);
StateSpaceModel state_space_from_json(const Json& j);
FrfSet frf_from_json(const Json& j);
InterfaceMap interface_map_from_json(const Json& j);
RcmConfig rcm_config_from_json(const Json& j);

// File helpers; load_json validates the schema field and reports the path
// in error messages.
Json load_json(const std::string& path);
void save_json(const Json& j, const std::string& path);

// Kind tag of an ssdss-v1 document ("modal_model", "state_space", ...).
std::string json_kind(const Json& j);

// FNV-1a 64-bit content hash, hex-encoded; used for output provenance.
std::string fnv1a_hex(const std::string& bytes);
std::string file_hash(const std::string& path);

}  // namespace ssdss
