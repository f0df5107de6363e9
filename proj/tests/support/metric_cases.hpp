#pragma once

#include <cstddef>

namespace cityvl::testsupport {

struct MetricCase {
  const char* candidate;
  const char* reference;
  double bleu;
  double rouge;
  double meteor;
};

// Frozen oracle values; regenerate with tests/oracles/gen_metric_fixtures.py.
inline constexpr MetricCase kMetricCases[] = {
    {"the cat sat on the mat",
     "the cat is on the mat",
     0.003343701525, 0.833333333333, 0.806666666667},
    {"a tall building stands near the river",
     "a tall tower stands by the river",
     0.000022089591, 0.714285714286, 0.637142857143},
    {"the parking lot is southwest of the news center",
     "the news center lies northeast of the parking lot",
     0.003432945240, 0.333333333333, 0.705215419501},
    {"three cars are parked along the street",
     "several cars are parked on the street",
     0.002907153685, 0.714285714286, 0.691428571429},
    {"this district mixes offices and small shops",
     "the district combines offices with small shops",
     0.000017567205, 0.571428571429, 0.450892857143},
    {"walk north for fifty meters then turn east",
     "head north about fifty meters and turn east",
     0.000020556681, 0.625000000000, 0.557500000000},
    {"the hospital is the closest public facility",
     "the nearest public facility is the hospital",
     0.000025586201, 0.428571428571, 0.730158730159},
    {"its flat roof suggests a warehouse",
     "a flat roof suggests storage use",
     0.002857440430, 0.500000000000, 0.625000000000},
    {"green space covers the southern half of the block",
     "the southern half of the block is green space",
     0.660632863603, 0.666666666667, 0.881944444444},
    {"the bridge crosses the railway near the station",
     "a bridge spans the railway beside the station",
     0.000020556681, 0.625000000000, 0.312500000000},
    {"buses stop directly outside the main entrance",
     "the bus stops right at the main entrance",
     0.002004199364, 0.400000000000, 0.564556962025},
    {"the tower is eighty meters tall",
     "the tower rises eighty meters",
     0.000022724387, 0.727272727273, 0.735294117647},
    {"pedestrians can reach the park through two gates",
     "two gates let pedestrians into the park",
     0.000020556681, 0.400000000000, 0.628169014085},
    {"heavy traffic fills the avenue at noon",
     "the avenue carries heavy traffic at midday",
     0.000022089591, 0.428571428571, 0.637142857143},
    {"the school sits between two residential blocks",
     "two residential blocks surround the school",
     0.002907153685, 0.461538461538, 0.793442622951},
    {"a fountain marks the center of the plaza",
     "the plaza has a fountain at its center",
     0.000020556681, 0.375000000000, 0.465000000000},
    {"warehouses line the eastern edge of the district",
     "the district's eastern edge is lined with warehouses",
     0.000016009559, 0.333333333333, 0.379591836735},
    {"the clinic shares a wall with the pharmacy",
     "the pharmacy is attached to the clinic",
     0.000019441308, 0.266666666667, 0.281690140845},
    {"street lamps illuminate the walking path",
     "lamps light the pedestrian path",
     0.000000149535, 0.545454545455, 0.294117647059},
    {"the stadium dominates the city skyline",
     "the skyline is dominated by the stadium",
     0.000016175297, 0.307692307692, 0.362318840580},
};

inline constexpr std::size_t kMetricCaseCount =
    sizeof(kMetricCases) / sizeof(kMetricCases[0]);

}  // namespace cityvl::testsupport
