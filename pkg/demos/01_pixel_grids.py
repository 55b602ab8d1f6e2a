"""Pixel grids, connectivity, and repair.

Walks through the binary patch representation: building grids, finding the
feed-connected component, deleting floating metal, and the portable mask
text format.
"""

from pixelpatch.grid import (connected_component, hamming, make_grid, mask_to_text,
                             random_grid, repair_floating)


def show(grid, title):
    print(f"--- {title} ({grid.nx}x{grid.ny}, {grid.active_count()} active)")
    m = grid.to_matrix()
    fx, fy = grid.feed
    for iy in range(grid.ny - 1, -1, -1):   # print with the feed row at the bottom
        row = []
        for ix in range(grid.nx):
            c = "#" if m[iy, ix] else "."
            if (ix, iy) == (fx, fy):
                c = "F" if m[iy, ix] else "f"
            row.append(c)
        print("   " + " ".join(row))


# a random metallization draws floating islands as well as the fed conductor
g = random_grid(10, 8, 0.45, seed=2024)
show(g, "random metallization, density 0.45")

mask = connected_component(g, g.feed)
print(f"\nfeed-connected component: {int(mask.sum())} of {g.active_count()} active pixels")

r = repair_floating(g)
show(r, "after repair (floating pixels deleted, feed forced on)")
print(f"\nrepair changed {hamming(g, r)} bits; repairing again changes "
      f"{hamming(r, repair_floating(r))} (idempotent)")

# masks round-trip through a line-oriented text form
print("\nmask text form of a 4x3 example:")
print(mask_to_text(make_grid(4, 3, 1)))
