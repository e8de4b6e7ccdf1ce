def shout(s):
    return s.upper() + "!"


name = "world"
greeting = f"hello {name}, {len(name)} letters"
print(greeting)
parts = "a,b,,c".split(",")
print(parts, "-".join(p for p in parts if p))
print(shout("hey") * 2, "%05.1f|%-4s|" % (3.14159, "ab"))
text = """multi
line {0}""".format(shout("x"))
print(text)
print("tab\there", r"raw\n", b"bytes", 'single "quoted"', "it's")
print(repr("esc\\aped"), "x" "y" "z")
print(name[1:4], name[::-1], name[-1], name.find("o"))
