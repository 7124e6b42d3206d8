#pragma once

#include <stdexcept>
#include <string>

namespace lfsgg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A class needs more instance ids than the vocabulary provides.
class VocabularyOverflow : public Error {
public:
    using Error::Error;
};

// A class or predicate label (or index) is not part of the vocabulary.
class UnknownLabel : public Error {
public:
    using Error::Error;
};

// A vocabulary file violates its own invariants (duplicates, empty lists).
class InvalidVocabulary : public Error {
public:
    using Error::Error;
};

// A probability vector is malformed (negative entry, or sum far from 1).
class InvalidDistribution : public Error {
public:
    using Error::Error;
};

// Tree search completed more branches than the configured cap allows.
class BranchBudgetExceeded : public Error {
public:
    using Error::Error;
};

// Exhaustive enumeration would exceed the hard guard on mapping count.
class SearchSpaceTooLarge : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

// A prediction references an image that has no ground truth.
class UnknownImageId : public Error {
public:
    using Error::Error;
};

// A generator could not produce a pair with the requested property.
class GenerationFailed : public Error {
public:
    using Error::Error;
};

} // namespace lfsgg
