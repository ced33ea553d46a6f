// Copyright 2026 The evlink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EVLINK_CLI_H_
#define EVLINK_CLI_H_

namespace evlink {

// Entry point of the evlink command-line tool. Returns the process exit
// status: 0 success, 1 usage error, 2 data error, 3 internal error.
int RunCli(int argc, char **argv);

}  // namespace evlink

#endif  // EVLINK_CLI_H_
