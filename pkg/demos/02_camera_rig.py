"""The spherical multi-view camera rig.

Cameras sit on three polar rings (-45, 0, +45 degrees) and sweep a full
azimuth rotation, 25 evenly spaced stops per ring, 75 views total. Poses are
exported as JSON for an external renderer.

Run: python demos/02_camera_rig.py
"""

import tempfile
from collections import Counter
from pathlib import Path

from realscale.camrig import export_rig, generate_rig, load_rig, pose_to_position
from realscale.geometry import bounding_sphere, generate_primitive

rig = generate_rig([-45.0, 0.0, 45.0], 75, radius=2.5)
print(f"default rig: {len(rig)} poses")
print("  views per polar ring:", dict(Counter(p.polar_deg for p in rig)))
print("  azimuth step within a ring:", rig[1].azimuth_deg - rig[0].azimuth_deg, "deg")

print()
print("first poses of each ring (positions on the radius-2.5 sphere):")
for pose in rig[::25]:
    x, y, z = pose_to_position(pose)
    print(f"  view {pose.view_index:2d}: polar={pose.polar_deg:+5.1f} "
          f"azimuth={pose.azimuth_deg:6.2f} -> ({x:+.3f}, {y:+.3f}, {z:+.3f})")

# the camera distance is usually derived from the target mesh
mesh = generate_primitive("blob", seed=3, radius=1.0, subdivisions=2, amplitude=0.2)
_, r = bounding_sphere(mesh)
framed = generate_rig([-45.0, 0.0, 45.0], 75, radius=2.5 * r)
print()
print(f"mesh bounding radius {r:.3f} cm -> camera radius {framed[0].radius:.3f} cm")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "poses.json"
    export_rig(framed, path)
    again = load_rig(path)
    print(f"export/import round trip: {len(again)} poses, "
          f"lossless={again == framed}")
