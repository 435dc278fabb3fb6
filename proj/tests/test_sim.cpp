#include <catch2/catch_amalgamated.hpp>

#include "visgrid/sim.hpp"

TEST_CASE("placeholder_sim") { REQUIRE(true); }
