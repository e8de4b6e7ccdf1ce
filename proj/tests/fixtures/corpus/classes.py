class Shape:
    sides = 0

    def __init__(self, name):
        self.name = name

    def area(self):
        return 0.0

    def describe(self):
        return "%s with area %.2f" % (self.name, self.area())

    def __str__(self):
        return "Shape(" + self.name + ")"


class Rect(Shape):
    sides = 4

    def __init__(self, w, h):
        super().__init__("rect")
        self.w = w
        self.h = h

    def area(self):
        return self.w * self.h

    @property
    def perimeter(self):
        return 2 * (self.w + self.h)


class Counter:
    def __init__(self):
        self.__count = 0

    def bump(self):
        self.__count += 1
        return self.__count


shapes = [Rect(2, 3), Shape("blob"), Rect(1.5, 4)]
for s in shapes:
    print(s.describe())
print(str(shapes[1]))
print(shapes[0].perimeter, Rect.sides, Shape.sides)
c = Counter()
c.bump()
print(c.bump())
