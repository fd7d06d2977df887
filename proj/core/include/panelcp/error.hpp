#pragma once

#include <stdexcept>
#include <string>

namespace panelcp {

// All library errors derive from Error; messages are prefixed with the
// module that raised them ("detect: ...", "estimate: ...").
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidPanel : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    DegenerateFit(const std::string& what, int m) : Error(what), m_(m) {}
    int m() const noexcept { return m_; }

private:
    int m_;
};

class NoEstimableRegime : public Error {
public:
    using Error::Error;
};

class NotTestable : public Error {
public:
    using Error::Error;
};

class GuardExceeded : public Error {
public:
    using Error::Error;
};

}  // namespace panelcp
