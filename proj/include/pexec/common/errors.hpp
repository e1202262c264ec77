// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pexec {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

//! A Digest-form reference could not be resolved from the node database.
class MissingNode : public Error {
  public:
    using Error::Error;
};

class MalformedEncoding : public Error {
  public:
    using Error::Error;
};

class ChildNotHashed : public Error {
  public:
    using Error::Error;
};

class KeyAbsent : public Error {
  public:
    using Error::Error;
};

class StorageFailure : public Error {
  public:
    using Error::Error;
};

class QueueClosed : public Error {
  public:
    using Error::Error;
};

//! No durable root record exists for the requested height.
class CorruptMeta : public Error {
  public:
    using Error::Error;
};

//! Raised by the coordinator when a cooperative crash point has halted the pipeline.
class SimulatedCrash : public Error {
  public:
    using Error::Error;
};

}  // namespace pexec
