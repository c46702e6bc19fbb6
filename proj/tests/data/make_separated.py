"""Writes separated.csv: two tiny datasets whose pedestrian features split them
perfectly, so every logistic fit over them is separated."""
import math

FPS = 10
rows = []


def add(ds, scene, agent, kind, pts):
    for f, (x, y) in pts:
        rows.append(f"{ds},{scene},{agent},{kind},{f},{x:.6f},{y:.6f}")


def line(f0, f1, a, b):
    n = f1 - f0
    return [(f0 + i, (a[0] + (b[0] - a[0]) * i / n, a[1] + (b[1] - a[1]) * i / n)) for i in range(n + 1)]


# lanes: straight, steady walkers and a fast car.
add("lanes", "lanes-1", "p1", "pedestrian", line(0, 100, (-7.5, 0.0), (7.5, 0.0)))
add("lanes", "lanes-1", "p2", "pedestrian", line(0, 100, (-7.5, 1.0), (7.5, 1.0)))
add("lanes", "lanes-1", "v1", "vehicle", line(0, 100, (0.5, -20.0), (0.5, 20.0)))


def wander(x, y, heading, phase):
    pts = []
    for f in range(101):
        pts.append((f, (x, y)))
        t = f / FPS
        speed = 0.2 if int(t + phase) % 3 == 0 else 0.9
        if f % 20 == 0:
            heading += 2.1
        x += speed / FPS * math.cos(heading)
        y += speed / FPS * math.sin(heading)
    return pts


# plaza: walkers that stop and turn, one who never moves, a slow car.
add("plaza", "plaza-1", "q1", "pedestrian", wander(-1.0, -1.0, 0.3, 0.0))
add("plaza", "plaza-1", "q2", "pedestrian", wander(1.0, 0.5, 2.0, 1.0))
add("plaza", "plaza-1", "q3", "pedestrian", line(0, 100, (3.0, 3.0), (3.0, 3.0)))
add("plaza", "plaza-1", "w1", "vehicle", line(0, 100, (0.0, -8.0), (0.0, 8.0)))

with open("separated.csv", "w", newline="\n") as out:
    out.write("dataset_id,scene_id,agent_id,kind,frame,x_m,y_m\n")
    out.write("\n".join(rows) + "\n")
