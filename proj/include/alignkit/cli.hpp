// alignkit/cli.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ALIGNKIT_CLI_HPP_
#define ALIGNKIT_CLI_HPP_

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace alignkit::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kConfigError = 3,
  kRuntimeError = 4,
};

/// Runs one command line (without the program name).  Option values may
/// also come from ALIGNKIT_<OPTION> environment variables and from a
/// --config file; explicit flags win over the environment, which wins
/// over the file.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace alignkit::cli

#endif  // ALIGNKIT_CLI_HPP_
