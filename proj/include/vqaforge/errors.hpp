/*
 * Copyright 2026 The vqa-forge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace vqaforge {

// Bad user-supplied configuration or missing stage inputs (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required input artifact is absent; message names the missing file(s).
struct MissingInputError : ConfigError {
  explicit MissingInputError(const std::string& msg) : ConfigError(msg) {}
};

// Image bytes could not be decoded (corrupt file, unsupported format).
struct DecodeError : std::runtime_error {
  explicit DecodeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Text that should follow a known format did not (LLM output, JSON bodies).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// HTTP round-trip failed terminally (4xx, or retries exhausted on 5xx/transport).
struct HttpError : std::runtime_error {
  HttpError(int status_code, const std::string& msg)
      : std::runtime_error(msg), status(status_code) {}
  int status;  // 0 when no HTTP status was received (transport-level failure)
};

// Replay-mode request with no matching cassette entry.
struct CassetteMiss : std::runtime_error {
  explicit CassetteMiss(const std::string& msg) : std::runtime_error(msg) {}
};

// A pipeline stage ran but failed its contract (CLI exit code 1).
struct StageError : std::runtime_error {
  explicit StageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vqaforge
