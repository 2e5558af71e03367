#pragma once

#include <stdexcept>
#include <string>

namespace fcg {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

// --- CSV ingestion ---------------------------------------------------------

class MalformedRow : public Error {
public:
    using Error::Error;
};
class NonMonotonicCycles : public Error {
public:
    using Error::Error;
};
class DecreasingCrackLength : public Error {
public:
    using Error::Error;
};
class MixedConditionInSeries : public Error {
public:
    using Error::Error;
};
class EmptyInput : public Error {
public:
    using Error::Error;
};
class SeriesTooShort : public Error {
public:
    using Error::Error;
};
class NonContiguousSeries : public Error {
public:
    using Error::Error;
};
class InvalidCondition : public Error {
public:
    using Error::Error;
};
class InvalidPointCount : public Error {
public:
    using Error::Error;
};

// --- splitting and normalization -------------------------------------------

class InvalidSplitSpec : public Error {
public:
    using Error::Error;
};
class DegenerateSeries : public Error {
public:
    using Error::Error;
};
class EmptyDevelopmentSet : public Error {
public:
    using Error::Error;
};
class DegenerateDimension : public Error {
public:
    using Error::Error;
};

// --- network ----------------------------------------------------------------

class InvalidArchitecture : public Error {
public:
    using Error::Error;
};
class InvalidTrainConfig : public Error {
public:
    using Error::Error;
};
class LengthMismatch : public Error {
public:
    using Error::Error;
};
class EmptyBatch : public Error {
public:
    using Error::Error;
};
class EmptySplit : public Error {
public:
    using Error::Error;
};
class NonFiniteLoss : public Error {
public:
    using Error::Error;
};
class MissingNormalizer : public Error {
public:
    using Error::Error;
};
class CorruptModelFile : public Error {
public:
    using Error::Error;
};
class VersionMismatch : public Error {
public:
    using Error::Error;
};

// --- evaluation and reporting -----------------------------------------------

class NearZeroTruth : public Error {
public:
    using Error::Error;
};
class SinkFailure : public Error {
public:
    using Error::Error;
};

// --- command line -----------------------------------------------------------

class ManifestMismatch : public Error {
public:
    using Error::Error;
};

} // namespace fcg
