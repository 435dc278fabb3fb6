#include <catch2/catch_amalgamated.hpp>

#include "visgrid/case_io.hpp"
#include "visgrid/casestudy.hpp"
#include "visgrid/report.hpp"

TEST_CASE("placeholder_io") { REQUIRE(true); }
