m, n = map(int, input().split())
sum = m
i = 0
while i < n:
  sum += 1
  i += 1
print (sum)
