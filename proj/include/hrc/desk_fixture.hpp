#pragma once

// Bundled standing-desk job: 8 columns x 15 rows, 27 robot-only, 19
// human-only and 4 either-agent tasks, one human and one robot. The text is
// kept byte-identical to data/desk.job.

#include <string_view>

#include "hrc/jobspec.hpp"

namespace hrc {

inline constexpr std::string_view kDeskJobText = R"job(
# Height-adjustable standing desk, one human operator and one robot.
#
# Columns 0-1 left leg, 2-3 right leg, 4-5 frame, 6-7 desktop and
# electrics. Durations are representative fixture constants in abstract
# time-units; they are not measured values.
#
# task <id> <H|R|E> <duration> <col> <row> <span>
board 8 15
agents 1 1

# row 0
task L1 H 4 0 0 1    # place left leg bracket
task L2 H 3 1 0 1    # place left leg screws
task R1 H 4 2 0 1    # place right leg bracket
task R2 H 3 3 0 1    # place right leg screws
task F1 R 5 4 0 1    # drill frame holes
task F2 R 5 5 0 1    # drill frame holes
task T1 E 3 6 0 2    # flip desktop
# row 1
task L3 R 3 0 1 1    # screw left bracket
task L4 R 2 1 1 1    # screw left leg screws
task R3 R 3 2 1 1    # screw right bracket
task R4 R 2 3 1 1    # screw right leg screws
task F3 H 4 4 1 2    # place frame rail
task T2 R 6 6 1 1    # drill desktop
task T3 R 6 7 1 1    # drill desktop
# row 2
task L5 E 3 0 2 2    # flip left leg
task R5 E 3 2 2 2    # flip right leg
task F4 R 3 4 2 1    # screw rail
task F5 R 3 5 2 1    # screw rail
task T4 H 2 6 2 1    # place threaded inserts
task T5 H 2 7 2 1    # place threaded inserts
# row 3
task L6 H 3 0 3 1    # place left foot
task L7 R 4 1 3 1    # gum left foot pad
task R6 H 3 2 3 1    # place right foot
task R7 R 4 3 3 1    # gum right foot pad
task F6 H 5 4 3 2    # match crossbar
task T6 R 4 6 3 1    # screw inserts
task T7 R 4 7 3 1    # screw inserts
# row 4
task L8 R 3 0 4 1    # screw left foot
task R8 R 3 2 4 1    # screw right foot
task F7 R 4 4 4 1    # screw crossbar
task F8 R 4 5 4 1    # screw crossbar
task T8 H 5 6 4 2    # place motor
# row 5
task A1 E 4 0 5 4    # rotate leg pair
task F9 R 3 4 5 1    # gum frame
task T9 R 5 6 5 1    # screw motor
task T10 R 4 7 5 1   # wire motor
# row 6
task M1 H 4 0 6 2    # match left leg to frame
task M2 H 4 2 6 2    # match right leg to frame
task T11 H 3 6 6 1   # place controller
# row 7
task M3 R 5 0 7 2    # screw left leg to frame
task M4 R 5 2 7 2    # screw right leg to frame
task T13 R 3 6 7 1   # screw controller
# row 8
task D1 H 6 0 8 7    # place desktop on frame
# row 9
task D2 R 3 0 9 1    # screw desktop
task D3 R 3 3 9 1    # screw desktop
task D4 H 3 5 9 2    # place cable tray
# row 10
task D6 H 4 0 10 4   # route cables
task D8 R 4 5 10 1   # test motor
# row 11
task D7 H 2 0 11 2   # place handset
# row 12
task D9 H 3 0 12 6   # final inspection
)job";

inline JobSpec desk_fixture() { return parse_jobspec(kDeskJobText.substr(1)); }

}  // namespace hrc
