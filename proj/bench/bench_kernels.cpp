// Serial reference vs OpenMP kernels for the objective and the depth renderer.
#include <benchmark/benchmark.h>

#include "posefit/objective.hpp"
#include "posefit/syntheval.hpp"

namespace {

using namespace posefit;

struct Scene {
  Skeleton skeleton = load_skeleton(POSEFIT_DATA_DIR "/skeletons/humanoid.skel");
  PoseParams pose;
  CameraSpec camera;
  PointCloud cloud{{Point3::Zero()}};

  Scene() {
    Rng rng(7);
    pose = random_pose(skeleton, Eigen::AlignedBox3d(Point3::Zero(), Point3::Zero()), rng);
    pose.set_root_orientation(skeleton.rest_orientation());
    camera.width = 320;
    camera.height = 240;
    camera.intrinsics = {280.0, 280.0, 159.5, 119.5};
    camera.world_to_camera = CameraSpec::look_at(Point3(-4.0, 0.0, 1.0), Point3(0.0, 0.0, 0.3));
    cloud = render_cloud(skeleton, pose, camera).cloud;
  }
};

const Scene& scene() {
  static const Scene s;
  return s;
}

void BM_ObjectiveReference(benchmark::State& state) {
  const auto& s = scene();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_reference(s.skeleton, s.pose, s.cloud));
  state.counters["points"] = static_cast<double>(s.cloud.size());
}

void BM_ObjectiveKernelSerial(benchmark::State& state) {
  const auto& s = scene();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(s.skeleton, s.pose, s.cloud, Execution::Serial));
}

void BM_ObjectiveKernelParallel(benchmark::State& state) {
  const auto& s = scene();
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate(s.skeleton, s.pose, s.cloud, Execution::Parallel));
}

void BM_Batch(benchmark::State& state) {
  const auto& s = scene();
  Rng rng(3);
  std::vector<PoseParams> poses;
  for (int i = 0; i < 64; ++i) poses.push_back(random_pose(s.skeleton, s.cloud.bounds(), rng));
  const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(s.skeleton, poses, s.cloud, exec));
}

void BM_Render(benchmark::State& state) {
  const auto& s = scene();
  PosedModel model = forward_kinematics(s.skeleton, s.pose);
  for (auto& seg : model.segments) {
    seg.start = s.camera.world_to_camera * seg.start;
    seg.end = s.camera.world_to_camera * seg.end;
  }
  const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
  for (auto _ : state) benchmark::DoNotOptimize(render_depth(model, s.camera, exec));
}

}  // namespace

BENCHMARK(BM_ObjectiveReference);
BENCHMARK(BM_ObjectiveKernelSerial);
BENCHMARK(BM_ObjectiveKernelParallel);
BENCHMARK(BM_Batch)->Arg(0)->Arg(1);
BENCHMARK(BM_Render)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
