// Benchmark comparing the OpenMP kernels against their serial references:
// BEV rasterization, row-wise affine projection, and all-object KNN.

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>

#include "cityvl/bev.hpp"
#include "cityvl/matrix.hpp"
#include "cityvl/scene.hpp"
#include "cityvl/spatial.hpp"

using namespace cityvl;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

CityScene synthetic_scene(std::size_t n_objects, std::size_t points_per_object,
                          unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 800.0);
  std::uniform_real_distribution<double> jitter(-6.0, 6.0);
  std::uniform_real_distribution<double> height(0.0, 40.0);
  std::vector<ObjectInstance> objects;
  for (std::size_t i = 0; i < n_objects; ++i) {
    const double cx = pos(rng), cy = pos(rng);
    std::vector<Point3> pts;
    for (std::size_t p = 0; p < points_per_object; ++p)
      pts.push_back({cx + jitter(rng), cy + jitter(rng), height(rng)});
    objects.emplace_back(i, i % 3 == 0 ? "Building" : "Car", std::move(pts));
  }
  return CityScene("bench", std::move(objects));
}

template <typename F>
double time_best_of(F&& fn, int reps) {
  double best_s = 1e9;
  for (int i = 0; i < reps; ++i) {
    const double t0 = now_seconds();
    fn();
    best_s = std::min(best_s, now_seconds() - t0);
  }
  return best_s;
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-24s serial %8.1f ms   parallel %8.1f ms   speedup %4.2fx   %s\n",
              name, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              equal ? "outputs identical" : "OUTPUTS DIFFER");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp disabled; parallel kernels run serially\n");
#endif

  {
    const CityScene scene = synthetic_scene(400, 2000, 7);
    Raster serial = render_global_bev_serial(scene, 0.5);
    Raster parallel = render_global_bev(scene, 0.5);
    const bool equal = serial.pixels() == parallel.pixels();
    const double ts = time_best_of(
        [&] { serial = render_global_bev_serial(scene, 0.5); }, 3);
    const double tp =
        time_best_of([&] { parallel = render_global_bev(scene, 0.5); }, 3);
    report("bev rasterization", ts, tp, equal);
  }

  {
    Matrix a(512, 256), w(256, 512);
    std::vector<double> bias(512, 0.25);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : a.data()) v = dist(rng);
    for (double& v : w.data()) v = dist(rng);
    Matrix serial = affine_rows_serial(a, w, bias);
    Matrix parallel = affine_rows(a, w, bias);
    const bool equal = serial == parallel;
    const double ts =
        time_best_of([&] { serial = affine_rows_serial(a, w, bias); }, 5);
    const double tp =
        time_best_of([&] { parallel = affine_rows(a, w, bias); }, 5);
    report("affine projection", ts, tp, equal);
  }

  {
    const CityScene scene = synthetic_scene(3000, 4, 13);
    std::vector<std::vector<ObjectId>> serial(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i)
      serial[i] = knn_neighbors(scene, scene.objects()[i].id(), 8);
    const auto parallel = knn_all(scene, 8);
    const bool equal = serial == parallel;
    const double ts = time_best_of(
        [&] {
          for (std::size_t i = 0; i < scene.size(); ++i)
            serial[i] = knn_neighbors(scene, scene.objects()[i].id(), 8);
        },
        3);
    const double tp = time_best_of([&] { (void)knn_all(scene, 8); }, 3);
    report("knn all objects", ts, tp, equal);
  }

  return 0;
}
