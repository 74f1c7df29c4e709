// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef TRAJBEAM_ERROR_HPP
#define TRAJBEAM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace trajbeam
{
    // Base of every error thrown by the library. error_class() is a stable,
    // machine-parsable token used by the CLI.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
        virtual const char *error_class() const noexcept { return "error"; }
        virtual int exit_code() const noexcept { return 1; }
    };

    class InvalidArgument : public Error
    {
    public:
        using Error::Error;
        const char *error_class() const noexcept override { return "invalid_argument"; }
        int exit_code() const noexcept override { return 2; }
    };

    class SchemaError : public Error
    {
    public:
        using Error::Error;
        const char *error_class() const noexcept override { return "schema_error"; }
        int exit_code() const noexcept override { return 3; }
    };

    class CapacityError : public Error
    {
    public:
        using Error::Error;
        const char *error_class() const noexcept override { return "capacity_error"; }
        int exit_code() const noexcept override { return 4; }
    };

    // Conditioning on an event of probability zero.
    class ConditioningError : public Error
    {
    public:
        using Error::Error;
        const char *error_class() const noexcept override { return "conditioning_error"; }
        int exit_code() const noexcept override { return 5; }
    };

    // A realization that the planning model cannot represent.
    class ModelMismatch : public Error
    {
    public:
        using Error::Error;
        const char *error_class() const noexcept override { return "model_mismatch"; }
        int exit_code() const noexcept override { return 6; }
    };

    class IoError : public Error
    {
    public:
        using Error::Error;
        const char *error_class() const noexcept override { return "io_error"; }
        int exit_code() const noexcept override { return 7; }
    };

    namespace detail
    {
        template <typename E = InvalidArgument>
        inline void require(bool condition, const std::string &message)
        {
            if (!condition)
                throw E(message);
        }
    }
}

#endif
