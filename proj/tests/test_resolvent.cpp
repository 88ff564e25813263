#include <catch2/catch_amalgamated.hpp>
#include "test_util.hpp"
