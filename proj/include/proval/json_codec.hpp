// Copyright 2026 The proval Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Canonical JSON encoding of domain types. Object keys are sorted (nlohmann's
// default std::map storage), feature names are the keys of "features", and a
// Missing value is encoded as null. A temporal value is {"date": ISO, "value": x}.

#pragma once

#include "json.hpp"
#include "proval/domain.hpp"

namespace proval {

using Json = nlohmann::json;

Json encode(const FeatureValue& v);
Json encode(const Property& p);
Json encode(const PropertyConfiguration& c);
Json encode(const FeatureSchema& s);

// All decoders throw InvalidArgument on malformed input.
FeatureValue decode_feature_value(const Json& j);
Property decode_property(const Json& j);
PropertyConfiguration decode_configuration(const Json& j);
FeatureSchema decode_schema(const Json& j);

// Compact, key-sorted serialization.
std::string canonical_dump(const Json& j);

}  // namespace proval
