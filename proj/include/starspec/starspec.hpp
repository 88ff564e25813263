#ifndef STARSPEC_STARSPEC_HPP
#define STARSPEC_STARSPEC_HPP

#include "starspec/config.hpp"
#include "starspec/dislocation.hpp"
#include "starspec/oracle.hpp"
#include "starspec/resolvent.hpp"

#endif  // STARSPEC_STARSPEC_HPP
