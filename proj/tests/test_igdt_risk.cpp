#include <catch2/catch_amalgamated.hpp>

#include "visgrid/igdt.hpp"
#include "visgrid/risk.hpp"

TEST_CASE("placeholder_igdt") { REQUIRE(true); }
