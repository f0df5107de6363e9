#pragma once

// Shared scene fixtures for the unit suites.

#include <sstream>
#include <string>

#include "cityvl/scene.hpp"

namespace cityvl::testsupport {

// Two landmarked objects with the coordinates from the relation template
// fixture, an unnamed car strictly inside the lot footprint, and one far
// object outside the default adjacency radius.
inline const char* kDemoSceneText = R"(scene riverside
object 0 Building
landmark News Center
p 16.2 412.3 36.9
p 26.2 412.3 36.9
p 16.2 422.3 36.9
p 26.2 422.3 36.9
object 1 Parking Lot
landmark the parking lot
p 44.1 438.9 5.23
p 64.1 438.9 5.23
p 44.1 458.9 5.23
p 64.1 458.9 5.23
object 2 Car
p 50.0 445.0 0.5
p 52.0 446.0 1.5
object 3 Park
landmark Riverside Park
p 90.0 400.0 0.0
p 110.0 400.0 0.0
p 90.0 430.0 2.0
p 110.0 430.0 2.0
object 4 Building
p 800.0 800.0 0.0
p 810.0 810.0 12.0
)";

inline CityScene demo_scene() {
  std::istringstream in(kDemoSceneText);
  return parse_scene(in, "demo");
}

}  // namespace cityvl::testsupport
