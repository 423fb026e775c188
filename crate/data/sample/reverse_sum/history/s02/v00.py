x = input().strip()
n = int(x)
r = int(x[::-1])
print("Reverse: {}".format(x[::-1]))
print("Sum: {}".format(n + r))
